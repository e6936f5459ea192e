#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "zendoo/transition.hpp"
#include "test_util.hpp"

using namespace zendoo;
using namespace zendoo::test;

namespace {

PaymentTx make_payment(const Secret& owner, std::vector<Utxo> ins,
                       std::vector<ScOutput> outs) {
    PaymentTx tx;
    tx.inputs = std::move(ins);
    tx.outputs = std::move(outs);
    Digest msg = tx.sighash();
    for (size_t i = 0; i < tx.inputs.size(); ++i)
        tx.signatures.push_back(sign_message(owner, msg));
    return tx;
}

BtTx make_bttx(const Secret& owner, std::vector<Utxo> ins,
               std::vector<BackwardTransfer> bts) {
    BtTx tx;
    tx.inputs = std::move(ins);
    tx.backward_transfers = std::move(bts);
    Digest msg = tx.sighash();
    for (size_t i = 0; i < tx.inputs.size(); ++i)
        tx.signatures.push_back(sign_message(owner, msg));
    return tx;
}

/// MC network, sidechain node, and a prover wired with real statement keys.
struct ProvedFix {
    ProofSystem sys;
    KeyRegistry keys;
    Digest seed = seeded_digest(800);
    Secret alice_sk = seeded_digest(801), forger_sk = seeded_digest(802);
    Address alice, forger;
    SidechainConfig cfg;
    StakeDistribution stakes;
    McChainState mc;
    TransitionProver prover;
    McOutPoint coin; // alice's MC funds; must precede node (set in make_node)
    LatusNode node;

    static constexpr uint32_t kDepth = 8;

    ProvedFix()
        : mc(sys, keys), prover(sys, keys, seeded_digest(810), seed), node(make_node()) {}

    LatusNode make_node() {
        alice = keys.add_secret(alice_sk);
        forger = keys.add_secret(forger_sk);
        cfg.ledger_id = seeded_digest(810);
        cfg.start_block = 3;
        cfg.epoch_len = 4;
        cfg.submit_len = 2;
        cfg.wcert_vk = prover.pkeys().wcert.vk;
        cfg.btr_vk = prover.pkeys().btr.vk;
        cfg.csw_vk = prover.pkeys().csw.vk;
        cfg.wcert_proofdata.entries = {{"sc_last", FieldType::DigestField},
                                       {"state_root", FieldType::DigestField},
                                       {"state_delta", FieldType::BitvectorField}};
        cfg.btr_proofdata.entries = {{"utxo", FieldType::BytesField}};
        cfg.csw_proofdata.entries = {{"utxo", FieldType::BytesField}};
        stakes.stakes[forger] = 1;

        McBlock b1;
        b1.header.prev_block = mc.tip();
        b1.header.height = 1;
        McTransaction cb;
        cb.coinbase = true;
        cb.outputs.push_back(McTxOutput{alice, 1000});
        b1.txs.push_back(cb);
        b1.registrations.push_back(cfg);
        seal_push(b1);
        coin = McOutPoint{cb.txid(), 0};
        return LatusNode(mc, cfg, kDepth, stakes, /*slots_per_epoch=*/1000, keys);
    }

    void seal_push(McBlock& b) {
        b.header.sc_txs_commitment = build_sctx_commitment(b);
        b.header.body_root = b.compute_body_root();
        REQUIRE(mc.extend_chain(b).ok());
    }

    McBlock next_mc() {
        McBlock b;
        b.header.prev_block = mc.tip();
        b.header.height = mc.tip_height() + 1;
        return b;
    }

    void mine_mc_to(uint64_t height) {
        while (mc.tip_height() < height) {
            McBlock b = next_mc();
            seal_push(b);
        }
    }

    void push_ft_block(const Address& receiver, int64_t amount) {
        McBlock b = next_mc();
        McTransaction tx;
        const auto& entry = mc.state().utxos().at(coin);
        tx.inputs.push_back(McTxInput{coin, {}});
        tx.outputs.push_back(McTxOutput{entry.addr, entry.amount - amount});
        tx.ft_outputs.push_back(
            ForwardTransfer{cfg.ledger_id, make_ft_metadata(receiver, alice), amount});
        tx.inputs[0].signature = sign_message(alice_sk, tx.sighash());
        b.txs.push_back(tx);
        seal_push(b);
        coin = McOutPoint{tx.txid(), 0};
    }

    ScBlock forge(uint64_t slot, uint64_t up_to_mc, std::vector<ScTransaction> txs = {}) {
        const ScChainEntry& parent = node.tip();
        ScBlock b;
        b.parent = node.tip_hash();
        b.height = parent.block.height + 1;
        b.slot = slot;
        b.epoch = slot / node.slots_per_epoch();
        b.forger = leader_for_slot(stakes, node.rand_for_child(parent, b.epoch), slot);
        ScState working = parent.state;
        if (parent.completes_epoch) working.reset_transients();
        for (uint64_t h = parent.last_mc_ref_height + 1; h <= up_to_mc; ++h) {
            McBlockReference ref = make_mc_reference(mc.block_at_height(h), cfg.ledger_id, working);
            if (ref.forward_transfers) working = apply_fttx(working, *ref.forward_transfers);
            if (ref.bt_requests) working = apply_btrtx(working, *ref.bt_requests);
            b.mc_refs.push_back(std::move(ref));
        }
        b.txs = std::move(txs);
        b.forger_signature = sign_message(forger_sk, b.sighash());
        return b;
    }

    /// Two FTs to alice in epoch 0 (25 and 10), two SC blocks closing the
    /// epoch, certificate mined into MC height 7. Returns the certificate.
    WithdrawalCertificate run_epoch0() {
        mine_mc_to(3);
        push_ft_block(alice, 25); // height 4
        push_ft_block(alice, 10); // height 5
        mine_mc_to(6);
        REQUIRE(node.submit_block(forge(1, 5)).ok());
        REQUIRE(node.submit_block(forge(2, 6)).ok());
        WithdrawalCertificate cert = prover.generate_wcert(node, mc, 0);
        McBlock b = next_mc(); // height 7, first submission slot of epoch 1
        b.certs.push_back(cert);
        seal_push(b);
        return cert;
    }

    /// SC UTXO of the given amount in the current tip state.
    Utxo sc_utxo(int64_t amount) const {
        for (const auto& [slot, u] : node.tip_state().mst.slots())
            if (u.amount == amount) return u;
        REQUIRE(false);
        return {};
    }
};

} // namespace

// ---------------------------------------------------------------------------
// base and merge proofs

TEST_CASE("base proofs attest single transactions and bind their witness") {
    ProvedFix f;
    ScState s0(ProvedFix::kDepth);
    Utxo c{f.alice, 10, seeded_digest(840)};
    s0.insert(c);

    ScTransaction pay = make_payment(f.alice_sk, {c}, {{f.forger, 10}});
    TransitionProof t = f.prover.prove_base(pay, s0);
    CHECK(t.kind == StatementKind::BasePayment);
    CHECK(t.from == s0.digest());
    CHECK(t.to == apply_payment(s0, std::get<PaymentTx>(pay), f.keys).digest());
    CHECK(f.prover.verify_transition(t));

    SUBCASE("witness mutation flips verification") {
        TransitionProof bad = t;
        bad.proof.witness.bytes[40] ^= 1;
        CHECK_FALSE(f.prover.verify_transition(bad));
    }
    SUBCASE("endpoint mutation flips verification") {
        TransitionProof bad = t;
        bad.to = seeded_digest(841);
        CHECK_FALSE(f.prover.verify_transition(bad));
    }
    SUBCASE("the honest prover refuses unsatisfying transitions") {
        ScTransaction forged = make_payment(f.forger_sk, {c}, {{f.forger, 10}});
        CHECK_THROWS_AS(f.prover.prove_base(forged, s0), UnsatisfiedError);
    }
    SUBCASE("forward and backward sync transactions prove too") {
        ScState empty(ProvedFix::kDepth);
        FtTx ft = build_fttx(empty, seeded_digest(842),
                             {ForwardTransfer{f.cfg.ledger_id,
                                              make_ft_metadata(f.alice, f.alice), 5}});
        TransitionProof tf = f.prover.prove_base(ScTransaction{ft}, empty);
        CHECK(tf.kind == StatementKind::BaseForward);
        CHECK(f.prover.verify_transition(tf));

        ScTransaction bt = make_bttx(f.alice_sk, {c}, {{f.alice, 10}});
        TransitionProof tb = f.prover.prove_base(bt, s0);
        CHECK(tb.kind == StatementKind::BaseBackward);
        CHECK(f.prover.verify_transition(tb));
    }
}

TEST_CASE("merge composes adjacent transitions; association is irrelevant") {
    ProvedFix f;
    ScState s0(ProvedFix::kDepth);
    Utxo c{f.alice, 12, seeded_digest(850)};
    s0.insert(c);

    // three chained payments alice -> forger -> alice -> forger
    std::vector<TransitionProof> bases;
    ScState cur = s0;
    Secret owners[3] = {f.alice_sk, f.forger_sk, f.alice_sk};
    Address targets[3] = {f.forger, f.alice, f.forger};
    for (int i = 0; i < 3; ++i) {
        Utxo in = cur.mst.slots().begin()->second;
        ScTransaction tx = make_payment(owners[i], {in}, {{targets[i], in.amount}});
        bases.push_back(f.prover.prove_base(tx, cur));
        cur = apply_payment(cur, std::get<PaymentTx>(tx), f.keys);
    }

    TransitionProof left = f.prover.prove_merge(f.prover.prove_merge(bases[0], bases[1]), bases[2]);
    TransitionProof right = f.prover.prove_merge(bases[0], f.prover.prove_merge(bases[1], bases[2]));
    CHECK(f.prover.verify_transition(left));
    CHECK(f.prover.verify_transition(right));
    // same endpoints regardless of merge order
    CHECK(left.from == right.from);
    CHECK(left.to == right.to);
    CHECK(left.from == s0.digest());
    CHECK(left.to == cur.digest());

    CHECK_THROWS_AS(f.prover.prove_merge(bases[0], bases[2]), UnsatisfiedError);

    TransitionProof bad = left;
    std::swap(bad.from, bad.to);
    CHECK_FALSE(f.prover.verify_transition(bad));
}

// ---------------------------------------------------------------------------
// block and epoch proofs

TEST_CASE("block proofs cover MC references and the transaction fold") {
    ProvedFix f;
    f.mine_mc_to(3);
    f.push_ft_block(f.alice, 25); // height 4
    REQUIRE(f.node.submit_block(f.forge(1, 4)).ok());

    const ScChainEntry& e1 = f.node.tip();
    TransitionProof t1 = f.prover.prove_block(*f.node.entry(e1.block.parent), e1.block);
    CHECK(t1.kind == StatementKind::BaseBlock);
    CHECK(t1.from == ScState(ProvedFix::kDepth).digest());
    CHECK(t1.to == e1.state.digest());
    CHECK(f.prover.verify_transition(t1));

    // a block carrying transactions folds them into the same proof
    Utxo c = f.sc_utxo(25);
    ScTransaction pay = make_payment(f.alice_sk, {c}, {{f.forger, 10}, {f.alice, 15}});
    f.mine_mc_to(5);
    REQUIRE(f.node.submit_block(f.forge(2, 5, {pay})).ok());
    const ScChainEntry& e2 = f.node.tip();
    TransitionProof t2 = f.prover.prove_block(*f.node.entry(e2.block.parent), e2.block);
    CHECK(t2.from == e1.state.digest());
    CHECK(t2.to == e2.state.digest());
    CHECK(f.prover.verify_transition(t2));

    TransitionProof bad = t2;
    bad.proof.witness.bytes[bad.proof.witness.bytes.size() / 2] ^= 1;
    CHECK_FALSE(f.prover.verify_transition(bad));

    // the two block proofs chain
    CHECK(f.prover.verify_transition(f.prover.prove_merge(t1, t2)));
}

TEST_CASE("epoch proof spans exactly the epoch's blocks") {
    ProvedFix f;
    f.mine_mc_to(3);
    f.push_ft_block(f.alice, 25);
    f.mine_mc_to(6);
    REQUIRE(f.node.submit_block(f.forge(1, 5)).ok());
    ScState start = f.node.tip_state(); // still epoch 0: no reset yet
    REQUIRE(f.node.submit_block(f.forge(2, 6)).ok());

    TransitionProof ep = f.prover.prove_epoch(f.node, 0);
    CHECK(ep.from == ScState(ProvedFix::kDepth).digest());
    CHECK(ep.to == f.node.tip_state().digest());
    CHECK(f.prover.verify_transition(ep));
    CHECK_THROWS_AS(f.prover.prove_epoch(f.node, 1), UnsatisfiedError); // not closed
    (void)start;
}

// ---------------------------------------------------------------------------
// certificates on the mainchain

TEST_CASE("generated certificates pass mainchain verification; mutants fail") {
    ProvedFix f;
    f.mine_mc_to(3);
    f.push_ft_block(f.alice, 25); // height 4
    f.mine_mc_to(6);
    REQUIRE(f.node.submit_block(f.forge(1, 5)).ok());
    // close the epoch with a backward transfer in flight
    Utxo c = f.sc_utxo(25);
    ScTransaction bt = make_bttx(f.alice_sk, {c}, {{f.alice, 25}});
    REQUIRE(f.node.submit_block(f.forge(2, 6, {bt})).ok());

    WithdrawalCertificate cert = f.prover.generate_wcert(f.node, f.mc, 0);
    CHECK(cert.quality == 2);
    CHECK(cert.bt_list.size() == 1);
    CHECK(f.mc.state().verify_wcert(cert, 7).ok());

    SUBCASE("mutations are rejected as bad proofs") {
        WithdrawalCertificate m1 = cert;
        m1.quality += 1;
        CHECK(f.mc.state().verify_wcert(m1, 7).reason == Reason::BadProof);
        WithdrawalCertificate m2 = cert;
        m2.bt_list[0].amount = 1;
        CHECK(f.mc.state().verify_wcert(m2, 7).reason == Reason::BadProof);
        WithdrawalCertificate m3 = cert;
        m3.proofdata[1] = seeded_digest(860); // claim a different end state root
        CHECK(f.mc.state().verify_wcert(m3, 7).reason == Reason::BadProof);
    }
    SUBCASE("acceptance pays the backward transfer at window close") {
        McBlock b = f.next_mc(); // height 7
        b.certs.push_back(cert);
        f.seal_push(b);
        const LedgerState* ls = f.mc.state().ledger(f.cfg.ledger_id);
        REQUIRE(ls);
        CHECK(ls->certs.count(0) == 1);
        CHECK(ls->wcert_paid == 25);
        auto payout = f.mc.state().utxos().find(McOutPoint{cert.digest(), 0});
        REQUIRE(payout != f.mc.state().utxos().end());
        CHECK(payout->second.addr == f.alice);
        CHECK(payout->second.amount == 25);
        CHECK(payout->second.mature_height == 9); // end of the submission window
    }
}

TEST_CASE("second-epoch certificates chain through the previous closing block") {
    ProvedFix f;
    WithdrawalCertificate cert0 = f.run_epoch0();

    // epoch 1: reference heights 7..10 (the height-7 block carries cert0)
    f.mine_mc_to(10);
    REQUIRE(f.node.submit_block(f.forge(3, 7)).ok());
    REQUIRE(f.node.submit_block(f.forge(4, 10)).ok());
    WithdrawalCertificate cert1 = f.prover.generate_wcert(f.node, f.mc, 1);
    CHECK(cert1.quality == 4);
    CHECK(f.mc.state().verify_wcert(cert1, 11).ok());

    McBlock b = f.next_mc(); // height 11
    b.certs.push_back(cert1);
    f.seal_push(b);
    CHECK(f.mc.state().ledger(f.cfg.ledger_id)->certs.count(1) == 1);
}

// ---------------------------------------------------------------------------
// withdrawal proofs

TEST_CASE("BTR proofs anchor at a certificate and chain through deltas") {
    ProvedFix f;
    WithdrawalCertificate cert0 = f.run_epoch0();
    const McBlock& block7 = f.mc.block_at_height(7);
    auto sum0 = f.node.epoch_summary(0);
    REQUIRE(sum0);
    Utxo u25 = f.sc_utxo(25), u10 = f.sc_utxo(10);

    SUBCASE("claim against the latest certificate") {
        MerkleProof incl = sum0->end_state.mst.prove_inclusion(u10);
        BtrRequest btr =
            f.prover.build_btr_proof(u10, f.alice_sk, f.alice, cert0, incl, {}, block7);
        CHECK(f.mc.state().verify_btr(btr, 8).ok());
        McBlock b = f.next_mc(); // height 8
        b.btrs.push_back(btr);
        f.seal_push(b);
        const LedgerState* ls = f.mc.state().ledger(f.cfg.ledger_id);
        CHECK(ls->nullifiers.count(u10.nullifier()) == 1);
        CHECK(ls->balance == 35); // BTRs don't move MC balance by themselves

        // the sidechain syncs the honored request and spends the UTXO
        f.mine_mc_to(10);
        REQUIRE(f.node.submit_block(f.forge(3, 8)).ok());
        CHECK_FALSE(f.node.tip_state().mst.contains(u10));
        REQUIRE(f.node.submit_block(f.forge(4, 10)).ok());

        // epoch-1 certificate pays it out and records the touched slot
        WithdrawalCertificate cert1 = f.prover.generate_wcert(f.node, f.mc, 1);
        REQUIRE(cert1.bt_list.size() == 1);
        CHECK(cert1.bt_list[0] == BackwardTransfer{f.alice, 10});
        McBlock b11 = f.next_mc();
        b11.certs.push_back(cert1);
        f.seal_push(b11);
        const McBlock& block11 = f.mc.block_at_height(11);

        // a stale anchor plus an untouched-delta chain reaches the new tipcert
        MerkleProof incl25 = sum0->end_state.mst.prove_inclusion(u25);
        BtrRequest chained = f.prover.build_btr_proof(u25, f.alice_sk, f.alice, cert0, incl25,
                                                      {cert1}, block11);
        CHECK(f.mc.state().verify_btr(chained, 12).ok());

        // the spent UTXO's slot is touched in cert1's delta: unprovable
        CHECK_THROWS_AS(f.prover.build_btr_proof(u10, f.alice_sk, f.alice, cert0, incl,
                                                 {cert1}, block11),
                        UnsatisfiedError);
    }
    SUBCASE("ownership and binding are enforced") {
        MerkleProof incl = sum0->end_state.mst.prove_inclusion(u10);
        CHECK_THROWS_AS(f.prover.build_btr_proof(u10, f.forger_sk, f.forger, cert0, incl,
                                                 {}, block7),
                        UnsatisfiedError); // not the owner
        BtrRequest btr =
            f.prover.build_btr_proof(u10, f.alice_sk, f.alice, cert0, incl, {}, block7);
        BtrRequest bad = btr;
        bad.amount += 1; // public input no longer matches the proof binding
        CHECK(f.mc.state().verify_btr(bad, 8).reason == Reason::BadProof);
    }
}

TEST_CASE("CSW proofs withdraw directly from a ceased sidechain") {
    ProvedFix f;
    WithdrawalCertificate cert0 = f.run_epoch0();
    const McBlock& block7 = f.mc.block_at_height(7);
    auto sum0 = f.node.epoch_summary(0);
    Utxo u25 = f.sc_utxo(25);
    MerkleProof incl = sum0->end_state.mst.prove_inclusion(u25);

    CswRequest early =
        f.prover.build_csw_proof(u25, f.alice_sk, f.alice, cert0, incl, {}, block7);
    CHECK(f.mc.state().verify_csw(early).reason == Reason::SidechainActive);

    // miss the epoch-1 window entirely: ceased at its close height
    f.mine_mc_to(13);
    REQUIRE(f.mc.state().ledger(f.cfg.ledger_id)->ceased());

    CswRequest csw =
        f.prover.build_csw_proof(u25, f.alice_sk, f.alice, cert0, incl, {}, block7);
    CHECK(f.mc.state().verify_csw(csw).ok());
    McBlock b = f.next_mc();
    b.csws.push_back(csw);
    f.seal_push(b);
    const LedgerState* ls = f.mc.state().ledger(f.cfg.ledger_id);
    CHECK(ls->csw_paid == 25);
    CHECK(ls->balance == 35 - 25); // ft_total 35, nothing certified out
    auto payout = f.mc.state().utxos().find(McOutPoint{csw.digest(), 0});
    REQUIRE(payout != f.mc.state().utxos().end());
    CHECK(payout->second.amount == 25);

    CHECK(f.mc.state().verify_csw(csw).reason == Reason::DuplicateNullifier);
}

// ---------------------------------------------------------------------------
// key separation and determinism

TEST_CASE("per-ledger keys isolate sidechains; proving is deterministic") {
    ProvedFix f;
    WithdrawalCertificate cert = f.run_epoch0();

    TransitionProver other(f.sys, f.keys, seeded_digest(811), f.seed);
    CHECK(other.pkeys().base_payment.vk == f.prover.pkeys().base_payment.vk);
    CHECK(other.pkeys().wcert.vk != f.prover.pkeys().wcert.vk);
    // the certificate does not verify under another ledger's key
    PublicInput in = f.mc.state().wcert_public_input(f.cfg, cert);
    CHECK(f.sys.verify(f.prover.pkeys().wcert.vk, in, cert.proof));
    CHECK_FALSE(f.sys.verify(other.pkeys().wcert.vk, in, cert.proof));

    // regenerating the certificate reproduces it bit for bit
    WithdrawalCertificate again = f.prover.generate_wcert(f.node, f.mc, 0);
    CHECK(again == cert);
}
