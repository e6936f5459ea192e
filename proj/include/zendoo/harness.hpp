#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zendoo/transition.hpp"

namespace zendoo::harness {

using nlohmann::json;

// Deterministic scenario runner. Logical ticks drive both chains: one MC
// block every ticks_per_mc_block ticks, one SC forging opportunity per tick.
// Certificates are generated automatically through the transition prover
// unless an epoch is scripted as withheld.

inline std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline std::vector<uint8_t> from_hex(const std::string& s) {
    if (s.size() % 2) throw std::runtime_error("from_hex: odd length");
    auto nibble = [](char c) -> uint8_t {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::runtime_error("from_hex: bad digit");
    };
    std::vector<uint8_t> out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>((nibble(s[2 * i]) << 4) | nibble(s[2 * i + 1]));
    return out;
}

inline std::string hex_of(const Digest& d) {
    return to_hex(std::span<const uint8_t>(d.bytes.data(), d.bytes.size()));
}

// ---------------------------------------------------------------------------
// scenario

struct ActorSpec {
    std::string name;
    int64_t mc_funds = 0;
};

struct SidechainSpec {
    std::string name;
    uint64_t start_block = 3;
    uint64_t epoch_len = 4;
    uint64_t submit_len = 2;
    std::string forger; // actor name
    std::set<uint64_t> withhold_epochs;
};

/// Scripted action. `tick` orders events; within one tick, file order rules.
struct ScenarioEvent {
    uint64_t tick = 0;
    std::string type; // forward_transfer | payment | backward_transfer | btr | csw | mc_fork | skip_slot
    std::string sidechain;
    std::string from, to;
    int64_t amount = 0;
    uint64_t fork_height = 0;
    uint64_t fork_length = 0;
};

struct Scenario {
    uint64_t version = 1;
    uint64_t seed = 0;
    uint32_t mst_depth = 16;
    uint64_t ticks_per_mc_block = 1;
    uint64_t slots_per_epoch = 100000;
    uint64_t stop_at_mc_height = 10;
    std::vector<ActorSpec> actors;
    std::vector<SidechainSpec> sidechains;
    std::vector<ScenarioEvent> events;

    json to_json() const {
        json j;
        j["version"] = version;
        j["seed"] = seed;
        j["mst_depth"] = mst_depth;
        j["ticks_per_mc_block"] = ticks_per_mc_block;
        j["slots_per_epoch"] = slots_per_epoch;
        j["stop_at_mc_height"] = stop_at_mc_height;
        j["actors"] = json::array();
        for (const auto& a : actors) j["actors"].push_back({{"name", a.name}, {"mc_funds", a.mc_funds}});
        j["sidechains"] = json::array();
        for (const auto& s : sidechains) {
            json e{{"name", s.name},       {"start_block", s.start_block},
                   {"epoch_len", s.epoch_len}, {"submit_len", s.submit_len},
                   {"forger", s.forger}};
            if (!s.withhold_epochs.empty())
                e["withhold_epochs"] = std::vector<uint64_t>(s.withhold_epochs.begin(),
                                                            s.withhold_epochs.end());
            j["sidechains"].push_back(e);
        }
        j["events"] = json::array();
        for (const auto& e : events) {
            json v{{"tick", e.tick}, {"type", e.type}};
            if (!e.sidechain.empty()) v["sidechain"] = e.sidechain;
            if (!e.from.empty()) v["from"] = e.from;
            if (!e.to.empty()) v["to"] = e.to;
            if (e.amount) v["amount"] = e.amount;
            if (e.type == "mc_fork") {
                v["fork_height"] = e.fork_height;
                v["fork_length"] = e.fork_length;
            }
            j["events"].push_back(v);
        }
        return j;
    }

    static Scenario from_json(const json& j) {
        Scenario s;
        s.version = j.at("version").get<uint64_t>();
        if (s.version != 1) throw std::runtime_error("scenario: unsupported version");
        s.seed = j.at("seed").get<uint64_t>();
        s.mst_depth = j.value("mst_depth", 16u);
        s.ticks_per_mc_block = j.value("ticks_per_mc_block", uint64_t{1});
        s.slots_per_epoch = j.value("slots_per_epoch", uint64_t{100000});
        s.stop_at_mc_height = j.at("stop_at_mc_height").get<uint64_t>();
        for (const auto& a : j.value("actors", json::array()))
            s.actors.push_back({a.at("name").get<std::string>(), a.value("mc_funds", int64_t{0})});
        for (const auto& c : j.value("sidechains", json::array())) {
            SidechainSpec sc;
            sc.name = c.at("name").get<std::string>();
            sc.start_block = c.at("start_block").get<uint64_t>();
            sc.epoch_len = c.at("epoch_len").get<uint64_t>();
            sc.submit_len = c.at("submit_len").get<uint64_t>();
            sc.forger = c.at("forger").get<std::string>();
            for (const auto& w : c.value("withhold_epochs", json::array()))
                sc.withhold_epochs.insert(w.get<uint64_t>());
            s.sidechains.push_back(sc);
        }
        for (const auto& v : j.value("events", json::array())) {
            ScenarioEvent e;
            e.tick = v.at("tick").get<uint64_t>();
            e.type = v.at("type").get<std::string>();
            e.sidechain = v.value("sidechain", "");
            e.from = v.value("from", "");
            e.to = v.value("to", "");
            e.amount = v.value("amount", int64_t{0});
            e.fork_height = v.value("fork_height", uint64_t{0});
            e.fork_length = v.value("fork_length", uint64_t{0});
            s.events.push_back(e);
        }
        return s;
    }

    static Scenario parse(const std::string& text) {
        try {
            return from_json(json::parse(text));
        } catch (const json::exception& e) {
            throw std::runtime_error(std::string("scenario parse error: ") + e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// report and snapshot

struct EventResult {
    uint64_t tick = 0;
    std::string description;
    bool accepted = false;
    std::string reason;

    json to_json() const {
        return {{"tick", tick}, {"event", description}, {"accepted", accepted}, {"reason", reason}};
    }
};

struct RunReport {
    std::vector<EventResult> events;
    json mc_blocks = json::array();      // per-block ledger summaries
    json sidechain_tips = json::array(); // final SC tips
    std::vector<std::string> violations; // invariant failures (empty = held)
    std::string report_digest;           // filled by finalize()

    bool invariants_held() const { return violations.empty(); }

    json to_json() const {
        json j;
        j["version"] = 1;
        j["events"] = json::array();
        for (const auto& e : events) j["events"].push_back(e.to_json());
        j["mc_blocks"] = mc_blocks;
        j["sidechain_tips"] = sidechain_tips;
        j["violations"] = violations;
        j["invariants_held"] = invariants_held();
        j["report_digest"] = report_digest;
        return j;
    }

    void finalize() {
        report_digest.clear();
        json j = to_json();
        j.erase("report_digest");
        std::string dump = j.dump();
        report_digest = hex_of(hash_bytes(std::vector<uint8_t>(dump.begin(), dump.end())));
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "events:\n";
        for (const auto& e : events)
            os << "  tick " << e.tick << "  " << (e.accepted ? "ok    " : "reject") << "  "
               << e.description << (e.accepted ? "" : "  [" + e.reason + "]") << "\n";
        os << "mc blocks: " << mc_blocks.size() << "\n";
        for (const auto& t : sidechain_tips)
            os << "sidechain " << t.at("name").get<std::string>() << ": height "
               << t.at("height") << ", status " << t.at("status").get<std::string>()
               << ", balance " << t.at("balance") << "\n";
        os << "invariants: " << (invariants_held() ? "held" : "VIOLATED") << "\n";
        for (const auto& v : violations) os << "  " << v << "\n";
        os << "report digest: " << report_digest << "\n";
        return os.str();
    }
};

/// Self-contained run artifact: the scenario plus every block of both chains
/// in arrival order, enough to re-verify all proofs offline.
struct Snapshot {
    Scenario scenario;
    std::vector<std::vector<uint8_t>> mc_blocks;
    std::map<std::string, std::vector<std::vector<uint8_t>>> sc_blocks;
    json report;

    json to_json() const {
        json j;
        j["version"] = 1;
        j["scenario"] = scenario.to_json();
        j["mc_blocks"] = json::array();
        for (const auto& b : mc_blocks) j["mc_blocks"].push_back(to_hex(b));
        j["sidechains"] = json::array();
        for (const auto& [name, blocks] : sc_blocks) {
            json e{{"name", name}, {"blocks", json::array()}};
            for (const auto& b : blocks) e["blocks"].push_back(to_hex(b));
            j["sidechains"].push_back(e);
        }
        j["report"] = report;
        return j;
    }

    static Snapshot from_json(const json& j) {
        Snapshot s;
        if (j.at("version").get<uint64_t>() != 1)
            throw std::runtime_error("snapshot: unsupported version");
        s.scenario = Scenario::from_json(j.at("scenario"));
        for (const auto& b : j.at("mc_blocks")) s.mc_blocks.push_back(from_hex(b.get<std::string>()));
        for (const auto& e : j.at("sidechains")) {
            auto& v = s.sc_blocks[e.at("name").get<std::string>()];
            for (const auto& b : e.at("blocks")) v.push_back(from_hex(b.get<std::string>()));
        }
        s.report = j.value("report", json());
        return s;
    }

    static Snapshot parse(const std::string& text) {
        try {
            return from_json(json::parse(text));
        } catch (const json::exception& e) {
            throw std::runtime_error(std::string("snapshot parse error: ") + e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// simulation

namespace detail {

inline Digest derive(const Digest& seed, const std::string& domain, const std::string& name) {
    Writer w;
    w.digest(seed);
    w.bytes(std::vector<uint8_t>(domain.begin(), domain.end()));
    w.bytes(std::vector<uint8_t>(name.begin(), name.end()));
    return hash_bytes(w.data());
}

inline Digest seed_digest(uint64_t seed) {
    Writer w;
    w.u64(seed);
    return hash_bytes(w.data());
}

} // namespace detail

class Simulation {
public:
    explicit Simulation(Scenario scenario)
        : sc_(std::move(scenario)), root_(detail::seed_digest(sc_.seed)), mc_(sys_, keys_) {
        for (const auto& a : sc_.actors) {
            Secret sk = detail::derive(root_, "actor", a.name);
            secrets_[a.name] = sk;
            addrs_[a.name] = keys_.add_secret(sk);
        }
        for (const auto& spec : sc_.sidechains) instances_.push_back(make_instance(spec));
        genesis_funding();
    }

    /// Drive the scenario to its stop condition.
    RunReport run() {
        for (uint64_t tick = 1; mc_.tip_height() < sc_.stop_at_mc_height; ++tick) {
            step(tick);
            if (tick > sc_.stop_at_mc_height * std::max<uint64_t>(sc_.ticks_per_mc_block, 1) + 16)
                throw std::runtime_error("simulation failed to reach stop height");
        }
        finish_report();
        return report_;
    }

    Snapshot snapshot() const {
        Snapshot s;
        s.scenario = sc_;
        s.mc_blocks = mc_arrivals_;
        for (const auto& inst : instances_) {
            auto& v = s.sc_blocks[inst->spec.name];
            for (const auto& b : inst->arrivals) {
                Writer w;
                b.encode(w);
                v.push_back(w.take());
            }
        }
        s.report = report_.to_json();
        return s;
    }

    const McChainState& mc() const { return mc_; }
    const LatusNode& node(const std::string& name) const { return instance(name).node; }
    const RunReport& report() const { return report_; }

private:
    struct Instance {
        SidechainSpec spec;
        SidechainConfig cfg;
        StakeDistribution stakes;
        Secret forger_sk;
        TransitionProver prover;
        LatusNode node;
        std::vector<ScBlock> arrivals;
        std::vector<ScTransaction> pending_txs;
        std::set<uint64_t> certified; // epochs whose cert was generated
        std::map<uint64_t, Digest> cert_blocks; // epoch -> MC block carrying its cert
        bool skip_this_tick = false;

        Instance(const SidechainSpec& s, const SidechainConfig& c, const StakeDistribution& st,
                 const Secret& fsk, TransitionProver p, LatusNode n)
            : spec(s), cfg(c), stakes(st), forger_sk(fsk), prover(std::move(p)),
              node(std::move(n)) {}
    };

    std::unique_ptr<Instance> make_instance(const SidechainSpec& spec) {
        if (!secrets_.count(spec.forger))
            throw std::runtime_error("scenario: unknown forger actor " + spec.forger);
        Digest ledger = detail::derive(root_, "ledger", spec.name);
        TransitionProver prover(sys_, keys_, ledger, root_);
        SidechainConfig cfg;
        cfg.ledger_id = ledger;
        cfg.start_block = spec.start_block;
        cfg.epoch_len = spec.epoch_len;
        cfg.submit_len = spec.submit_len;
        cfg.wcert_vk = prover.pkeys().wcert.vk;
        cfg.btr_vk = prover.pkeys().btr.vk;
        cfg.csw_vk = prover.pkeys().csw.vk;
        cfg.wcert_proofdata.entries = {{"sc_last", FieldType::DigestField},
                                       {"state_root", FieldType::DigestField},
                                       {"state_delta", FieldType::BitvectorField}};
        cfg.btr_proofdata.entries = {{"utxo", FieldType::BytesField}};
        cfg.csw_proofdata.entries = {{"utxo", FieldType::BytesField}};
        StakeDistribution stakes;
        stakes.stakes[addrs_.at(spec.forger)] = 1;
        LatusNode node(mc_, cfg, sc_.mst_depth, stakes, sc_.slots_per_epoch, keys_);
        return std::make_unique<Instance>(spec, cfg, stakes, secrets_.at(spec.forger),
                                          std::move(prover), std::move(node));
    }

    Instance& instance(const std::string& name) const {
        for (const auto& i : instances_)
            if (i->spec.name == name) return *i;
        throw std::runtime_error("unknown sidechain " + name);
    }

    void genesis_funding() {
        McBlock b;
        b.header.prev_block = mc_.tip();
        b.header.height = 1;
        McTransaction cb;
        cb.coinbase = true;
        for (const auto& a : sc_.actors)
            if (a.mc_funds > 0) cb.outputs.push_back(McTxOutput{addrs_.at(a.name), a.mc_funds});
        if (!cb.outputs.empty()) b.txs.push_back(cb);
        for (const auto& inst : instances_) b.registrations.push_back(inst->cfg);
        push_mc(b);
    }

    void push_mc(McBlock& b) {
        b.header.sc_txs_commitment = build_sctx_commitment(b);
        b.header.body_root = b.compute_body_root();
        Outcome o = mc_.extend_chain(b);
        if (!o.ok() && o.reason != Reason::NotLongest)
            throw std::runtime_error(std::string("mc block rejected: ") + to_string(o.reason));
        Writer w;
        b.encode(w);
        mc_arrivals_.push_back(w.take());
        if (o.ok()) record_mc_summary(b);
    }

    void record_mc_summary(const McBlock& b) {
        json entry{{"height", b.header.height}, {"hash", hex_of(b.hash())}};
        json scs = json::array();
        for (const auto& inst : instances_) {
            const LedgerState* ls = mc_.state().ledger(inst->cfg.ledger_id);
            if (!ls) continue;
            scs.push_back({{"name", inst->spec.name},
                           {"balance", ls->balance},
                           {"ft_total", ls->ft_total},
                           {"wcert_paid", ls->wcert_paid},
                           {"csw_paid", ls->csw_paid},
                           {"status", ls->ceased() ? "ceased" : "active"}});
            // safeguard identity on every active-chain block
            if (ls->balance < 0 ||
                ls->balance != ls->ft_total - ls->wcert_paid - ls->csw_paid)
                report_.violations.push_back("safeguard violated for " + inst->spec.name +
                                             " at height " + std::to_string(b.header.height));
        }
        entry["sidechains"] = scs;
        report_.mc_blocks.push_back(entry);
    }

    void record(uint64_t tick, std::string desc, bool accepted, std::string reason) {
        report_.events.push_back({tick, std::move(desc), accepted, std::move(reason)});
    }

    // deterministic greedy coin selection over the actor's mature MC outputs
    McTransaction build_mc_spend(uint64_t tick, const std::string& actor, int64_t amount,
                                 const Digest& ft_ledger, const Address& ft_receiver,
                                 const Address& ft_payback) {
        Address addr = addrs_.at(actor);
        uint64_t height = mc_.tip_height() + 1;
        McTransaction tx;
        int64_t gathered = 0;
        for (const auto& [op, e] : mc_.state().utxos()) {
            if (e.addr != addr || height < e.mature_height) continue;
            if (spent_.count(op)) continue;
            tx.inputs.push_back(McTxInput{op, {}});
            gathered += e.amount;
            if (gathered >= amount) break;
        }
        if (gathered < amount) throw std::runtime_error("insufficient MC funds for " + actor);
        if (gathered > amount) tx.outputs.push_back(McTxOutput{addr, gathered - amount});
        tx.ft_outputs.push_back(
            ForwardTransfer{ft_ledger, make_ft_metadata(ft_receiver, ft_payback), amount});
        Digest msg = tx.sighash();
        for (auto& in : tx.inputs) in.signature = sign_message(secrets_.at(actor), msg);
        (void)tick;
        return tx;
    }

    // deterministic selection of the actor's SC coins summing to `amount`
    std::vector<Utxo> pick_sc_coins(const Instance& inst, const Address& owner, int64_t amount) {
        std::vector<Utxo> picked;
        int64_t gathered = 0;
        for (const auto& [slot, u] : inst.node.tip_state().mst.slots()) {
            if (u.addr != owner) continue;
            bool reserved = false;
            for (const auto& tx : inst.pending_txs) {
                const std::vector<Utxo>* ins = nullptr;
                if (const auto* p = std::get_if<PaymentTx>(&tx)) ins = &p->inputs;
                if (const auto* bt = std::get_if<BtTx>(&tx)) ins = &bt->inputs;
                if (ins)
                    for (const auto& i : *ins) reserved |= (i == u);
            }
            if (reserved) continue;
            picked.push_back(u);
            gathered += u.amount;
            if (gathered >= amount) break;
        }
        if (gathered < amount) throw std::runtime_error("insufficient SC funds");
        return picked;
    }

    void handle_event(uint64_t tick, const ScenarioEvent& e) {
        std::string desc = e.type + (e.sidechain.empty() ? "" : " " + e.sidechain) +
                           (e.from.empty() ? "" : " from=" + e.from) +
                           (e.to.empty() ? "" : " to=" + e.to) +
                           (e.amount ? " amount=" + std::to_string(e.amount) : "");
        try {
            if (e.type == "forward_transfer") {
                Instance& inst = instance(e.sidechain);
                const std::string& to = e.to.empty() ? e.from : e.to;
                McTransaction tx = build_mc_spend(tick, e.from, e.amount, inst.cfg.ledger_id,
                                                  addrs_.at(to), addrs_.at(e.from));
                for (const auto& in : tx.inputs) spent_.insert(in.outpoint);
                pending_mc_txs_.push_back(tx);
                record(tick, desc, true, "queued");
            } else if (e.type == "payment" || e.type == "backward_transfer") {
                Instance& inst = instance(e.sidechain);
                Address owner = addrs_.at(e.from);
                auto coins = pick_sc_coins(inst, owner, e.amount);
                int64_t total = 0;
                for (const auto& c : coins) total += c.amount;
                if (e.type == "payment") {
                    PaymentTx tx;
                    tx.inputs = coins;
                    tx.outputs.push_back({addrs_.at(e.to.empty() ? e.from : e.to), e.amount});
                    if (total > e.amount) tx.outputs.push_back({owner, total - e.amount});
                    Digest msg = tx.sighash();
                    for (size_t i = 0; i < tx.inputs.size(); ++i)
                        tx.signatures.push_back(sign_message(secrets_.at(e.from), msg));
                    inst.pending_txs.push_back(tx);
                } else {
                    if (total != e.amount)
                        throw std::runtime_error("backward_transfer needs exact coins");
                    BtTx tx;
                    tx.inputs = coins;
                    tx.backward_transfers.push_back(
                        {addrs_.at(e.to.empty() ? e.from : e.to), e.amount});
                    Digest msg = tx.sighash();
                    for (size_t i = 0; i < tx.inputs.size(); ++i)
                        tx.signatures.push_back(sign_message(secrets_.at(e.from), msg));
                    inst.pending_txs.push_back(tx);
                }
                record(tick, desc, true, "queued");
            } else if (e.type == "btr" || e.type == "csw") {
                Instance& inst = instance(e.sidechain);
                WithdrawalRequest req = build_withdrawal(inst, e);
                if (e.type == "btr")
                    pending_btrs_.push_back(req);
                else
                    pending_csws_.push_back(req);
                record(tick, desc, true, "queued");
            } else if (e.type == "mc_fork") {
                inject_fork(e.fork_height, e.fork_length);
                for (const auto& inst : instances_) inst->node.resync();
                record(tick, desc, true, "applied");
            } else if (e.type == "skip_slot") {
                instance(e.sidechain).skip_this_tick = true;
                record(tick, desc, true, "applied");
            } else {
                throw std::runtime_error("unknown event type " + e.type);
            }
        } catch (const std::exception& ex) {
            record(tick, desc, false, ex.what());
        }
    }

    WithdrawalRequest build_withdrawal(Instance& inst, const ScenarioEvent& e) {
        if (inst.cert_blocks.empty()) throw std::runtime_error("no certified state yet");
        auto [epoch, block_hash] = *inst.cert_blocks.rbegin();
        const McBlock* terminal_ptr = mc_.block(block_hash);
        if (!terminal_ptr) throw std::runtime_error("certificate block unknown");
        const McBlock& terminal = *terminal_ptr;
        const WithdrawalCertificate* cert = nullptr;
        for (const auto& c : terminal.certs)
            if (c.ledger_id == inst.cfg.ledger_id && c.epoch_id == epoch) cert = &c;
        if (!cert) throw std::runtime_error("certificate block missing the certificate");
        auto sum = inst.node.epoch_summary(epoch);
        if (!sum) throw std::runtime_error("certified epoch not on the node's chain");
        Address owner = addrs_.at(e.from);
        for (const auto& [slot, u] : sum->end_state.mst.slots()) {
            if (u.addr != owner || u.amount != e.amount) continue;
            MerkleProof incl = sum->end_state.mst.prove_inclusion(u);
            Address receiver = addrs_.at(e.to.empty() ? e.from : e.to);
            if (e.type == "btr")
                return inst.prover.build_btr_proof(u, secrets_.at(e.from), receiver, *cert,
                                                   incl, {}, terminal);
            return inst.prover.build_csw_proof(u, secrets_.at(e.from), receiver, *cert, incl,
                                               {}, terminal);
        }
        throw std::runtime_error("no certified UTXO of that amount");
    }

    void inject_fork(uint64_t from_height, uint64_t length) {
        Digest prev = mc_.block_at_height(from_height).hash();
        for (uint64_t i = 1; i <= length; ++i) {
            McBlock b;
            b.header.prev_block = prev;
            b.header.height = from_height + i;
            b.header.work_nonce = 0x900000 + i; // distinct from the main line
            push_mc(b);
            prev = b.hash();
        }
    }

    /// Certificates due for submission in the MC block at `height`.
    std::vector<WithdrawalCertificate> due_certs(uint64_t height) {
        std::vector<WithdrawalCertificate> out;
        for (const auto& inst : instances_) {
            if (height < inst->cfg.start_block) continue;
            auto [cur_epoch, idx] = epoch_of(inst->cfg, height);
            if (cur_epoch == 0 || idx >= inst->cfg.submit_len) continue;
            uint64_t e = cur_epoch - 1;
            if (inst->certified.count(e) || inst->spec.withhold_epochs.count(e)) continue;
            if (!inst->node.epoch_summary(e)) continue; // SC hasn't closed it
            try {
                out.push_back(inst->prover.generate_wcert(inst->node, mc_, e));
            } catch (const std::exception& ex) {
                record(0, "wcert generation for " + inst->spec.name, false, ex.what());
            }
            inst->certified.insert(e);
        }
        return out;
    }

    void produce_mc_block(uint64_t tick) {
        uint64_t height = mc_.tip_height() + 1;
        McBlock b;
        b.header.prev_block = mc_.tip();
        b.header.height = height;
        for (auto& cert : due_certs(height)) {
            Outcome o = mc_.state().verify_wcert(cert, height);
            record(tick, "wcert " + hex_of(cert.ledger_id).substr(0, 8) + " epoch " +
                             std::to_string(cert.epoch_id),
                   o.ok(), to_string(o.reason));
            if (o.ok()) b.certs.push_back(cert);
        }
        for (auto& tx : pending_mc_txs_) {
            Outcome o = mc_.state().verify_tx(tx, height);
            if (o.ok()) b.txs.push_back(tx);
            else record(tick, "mc tx", false, to_string(o.reason));
        }
        pending_mc_txs_.clear();
        for (auto& q : pending_btrs_) {
            Outcome o = mc_.state().verify_btr(q, height);
            record(tick, "btr nullifier " + hex_of(q.nullifier).substr(0, 8), o.ok(),
                   to_string(o.reason));
            if (o.ok()) b.btrs.push_back(q);
        }
        pending_btrs_.clear();
        for (auto& q : pending_csws_) {
            Outcome o = mc_.state().verify_csw(q);
            record(tick, "csw nullifier " + hex_of(q.nullifier).substr(0, 8), o.ok(),
                   to_string(o.reason));
            if (o.ok()) b.csws.push_back(q);
        }
        pending_csws_.clear();
        push_mc(b);
        for (const auto& cert : b.certs) {
            for (const auto& inst : instances_)
                if (cert.ledger_id == inst->cfg.ledger_id)
                    inst->cert_blocks[cert.epoch_id] = b.hash();
        }
    }

    void forge_sidechains(uint64_t tick) {
        for (const auto& inst : instances_) {
            if (inst->skip_this_tick) {
                inst->skip_this_tick = false;
                continue;
            }
            // catch up on MC references, splitting at withdrawal-epoch
            // boundaries; several SC blocks per tick are allowed
            uint64_t sub = 0;
            while (true) {
                const ScChainEntry& parent = inst->node.tip();
                uint64_t from = parent.last_mc_ref_height + 1;
                uint64_t to = mc_.tip_height();
                if (from < inst->cfg.start_block) from = inst->cfg.start_block;
                bool has_refs = from <= to;
                bool has_txs = !inst->pending_txs.empty();
                if (!has_refs && (!has_txs || sub > 0)) break;
                if (has_refs) {
                    // stop at the first boundary in range
                    for (uint64_t h = from; h <= to; ++h) {
                        auto [ep, idx] = epoch_of(inst->cfg, h);
                        if (idx == inst->cfg.epoch_len - 1) {
                            to = h;
                            break;
                        }
                    }
                }
                ScBlock b = forge_one(*inst, tick, tick * 16 + sub, has_refs ? to : from - 1);
                ScOutcome o = inst->node.submit_block(b);
                if (!o.ok())
                    report_.violations.push_back("sc block rejected on " + inst->spec.name +
                                                 ": " + to_string(o.reason));
                inst->arrivals.push_back(b);
                ++sub;
                if (sub > 64) throw std::runtime_error("sc forging did not converge");
            }
        }
    }

    ScBlock forge_one(Instance& inst, uint64_t tick, uint64_t slot, uint64_t up_to_mc) {
        const ScChainEntry& parent = inst.node.tip();
        if (parent.block.height > 0 && slot <= parent.block.slot) slot = parent.block.slot + 1;
        ScBlock b;
        b.parent = inst.node.tip_hash();
        b.height = parent.block.height + 1;
        b.slot = slot;
        b.epoch = slot / inst.node.slots_per_epoch();
        b.forger = leader_for_slot(inst.stakes, inst.node.rand_for_child(parent, b.epoch), slot);
        ScState working = parent.state;
        if (parent.completes_epoch) working.reset_transients();
        for (uint64_t h = parent.last_mc_ref_height + 1; h <= up_to_mc; ++h) {
            McBlockReference ref =
                make_mc_reference(mc_.block_at_height(h), inst.cfg.ledger_id, working);
            if (ref.forward_transfers) working = apply_fttx(working, *ref.forward_transfers);
            if (ref.bt_requests) working = apply_btrtx(working, *ref.bt_requests);
            b.mc_refs.push_back(std::move(ref));
        }
        // a queued tx can go stale before forging (input claimed by a BTR,
        // output slot taken by an FT): drop it rather than poison the block
        for (auto& tx : inst.pending_txs) {
            try {
                if (const auto* p = std::get_if<PaymentTx>(&tx))
                    working = apply_payment(working, *p, keys_);
                else if (const auto* bt = std::get_if<BtTx>(&tx))
                    working = apply_bttx(working, *bt, keys_);
                b.txs.push_back(std::move(tx));
            } catch (const ScApplyError& ex) {
                record(tick, "sc tx on " + inst.spec.name, false, ex.what());
            }
        }
        inst.pending_txs.clear();
        b.forger_signature = sign_message(inst.forger_sk, b.sighash());
        return b;
    }

    void step(uint64_t tick) {
        for (const auto& e : sc_.events)
            if (e.tick == tick) handle_event(tick, e);
        if (tick % std::max<uint64_t>(sc_.ticks_per_mc_block, 1) == 0) produce_mc_block(tick);
        forge_sidechains(tick);
    }

    void finish_report() {
        for (const auto& inst : instances_) {
            const LedgerState* ls = mc_.state().ledger(inst->cfg.ledger_id);
            report_.sidechain_tips.push_back(
                {{"name", inst->spec.name},
                 {"height", inst->node.tip().block.height},
                 {"state_digest", hex_of(inst->node.tip_state().digest())},
                 {"balance", ls ? ls->balance : 0},
                 {"status", ls && ls->ceased() ? "ceased" : "active"}});
            // replay determinism: a fresh node over the same blocks agrees
            LatusNode fresh(mc_, inst->cfg, sc_.mst_depth, inst->stakes, sc_.slots_per_epoch,
                            keys_);
            for (const auto& b : inst->arrivals) fresh.submit_block(b);
            if (fresh.tip_state().digest() != inst->node.tip_state().digest())
                report_.violations.push_back("replay divergence on " + inst->spec.name);
        }
        report_.finalize();
    }

    Scenario sc_;
    Digest root_;
    ProofSystem sys_;
    KeyRegistry keys_;
    std::map<std::string, Secret> secrets_;
    std::map<std::string, Address> addrs_;
    McChainState mc_;
    std::vector<std::unique_ptr<Instance>> instances_;
    std::vector<std::vector<uint8_t>> mc_arrivals_;
    std::vector<McTransaction> pending_mc_txs_;
    std::vector<BtrRequest> pending_btrs_;
    std::vector<CswRequest> pending_csws_;
    std::set<McOutPoint> spent_; // outpoints consumed by queued MC txs
    RunReport report_;
};

inline RunReport run(const Scenario& scenario) { return Simulation(scenario).run(); }

/// Re-run the embedded scenario; byte-identical report expected for intact
/// snapshots.
inline RunReport replay(const Snapshot& snap) { return Simulation(snap.scenario).run(); }

/// Offline re-verification: replay every stored block through fresh chain
/// state, re-checking commitments, certificates, and withdrawal proofs.
inline bool verify(const Snapshot& snap) {
    try {
        Scenario sc = snap.scenario;
        ProofSystem sys;
        KeyRegistry keys;
        Digest root = detail::seed_digest(sc.seed);
        std::map<std::string, Address> addrs;
        for (const auto& a : sc.actors) addrs[a.name] = keys.add_secret(detail::derive(root, "actor", a.name));
        McChainState mc(sys, keys);
        struct Entry {
            SidechainConfig cfg;
            StakeDistribution stakes;
            std::unique_ptr<TransitionProver> prover;
            std::unique_ptr<LatusNode> node;
        };
        std::map<std::string, Entry> nodes;
        for (const auto& spec : sc.sidechains) {
            Entry e;
            Digest ledger = detail::derive(root, "ledger", spec.name);
            e.prover = std::make_unique<TransitionProver>(sys, keys, ledger, root);
            e.cfg.ledger_id = ledger;
            e.cfg.start_block = spec.start_block;
            e.cfg.epoch_len = spec.epoch_len;
            e.cfg.submit_len = spec.submit_len;
            e.cfg.wcert_vk = e.prover->pkeys().wcert.vk;
            e.cfg.btr_vk = e.prover->pkeys().btr.vk;
            e.cfg.csw_vk = e.prover->pkeys().csw.vk;
            e.cfg.wcert_proofdata.entries = {{"sc_last", FieldType::DigestField},
                                             {"state_root", FieldType::DigestField},
                                             {"state_delta", FieldType::BitvectorField}};
            e.cfg.btr_proofdata.entries = {{"utxo", FieldType::BytesField}};
            e.cfg.csw_proofdata.entries = {{"utxo", FieldType::BytesField}};
            e.stakes.stakes[addrs.at(spec.forger)] = 1;
            e.node = std::make_unique<LatusNode>(mc, e.cfg, sc.mst_depth, e.stakes,
                                                 sc.slots_per_epoch, keys);
            nodes.emplace(spec.name, std::move(e));
        }
        for (const auto& raw : snap.mc_blocks) {
            Reader r(raw);
            McBlock b = McBlock::decode(r);
            r.expect_done();
            if (b.header.body_root != b.compute_body_root()) return false;
            Outcome o = mc.extend_chain(b);
            if (!o.ok() && o.reason != Reason::NotLongest) return false;
        }
        for (const auto& [name, raws] : snap.sc_blocks) {
            auto it = nodes.find(name);
            if (it == nodes.end()) return false;
            for (const auto& raw : raws) {
                Reader r(raw);
                ScBlock b = ScBlock::decode(r);
                r.expect_done();
                ScOutcome o = it->second.node->submit_block(b);
                if (!o.ok() && o.reason != ScReason::NotPreferred) return false;
            }
        }
        // cross-check final tips against the recorded report
        if (snap.report.contains("sidechain_tips")) {
            for (const auto& t : snap.report.at("sidechain_tips")) {
                const auto& e = nodes.at(t.at("name").get<std::string>());
                if (hex_of(e.node->tip_state().digest()) !=
                    t.at("state_digest").get<std::string>())
                    return false;
            }
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace zendoo::harness
