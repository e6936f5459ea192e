#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "zendoo/harness.hpp"

using namespace zendoo::harness;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic mainchain/sidechain transfer-protocol simulator"};
    app.require_subcommand(1);

    std::string scenario_path, snapshot_path, report_path, out_snapshot, format = "text";
    long long seed_override = -1;

    auto* run_cmd = app.add_subcommand("run", "run a scenario to its stop condition");
    run_cmd->add_option("scenario", scenario_path, "scenario file (json)")->required();
    run_cmd->add_option("--seed", seed_override, "override the scenario seed");
    run_cmd->add_option("--report", report_path, "write the structured report here");
    run_cmd->add_option("--snapshot", out_snapshot, "write a replayable snapshot here");

    auto* replay_cmd = app.add_subcommand("replay", "re-run a snapshot's scenario and compare");
    replay_cmd->add_option("snapshot", snapshot_path, "snapshot file")->required();

    auto* verify_cmd = app.add_subcommand("verify", "re-check every stored block and proof");
    verify_cmd->add_option("snapshot", snapshot_path, "snapshot file")->required();

    auto* report_cmd = app.add_subcommand("report", "print the report stored in a snapshot");
    report_cmd->add_option("snapshot", snapshot_path, "snapshot file")->required();
    report_cmd->add_option("--format", format, "text|structured")
        ->check(CLI::IsMember({"text", "structured"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            Scenario sc = Scenario::parse(slurp(scenario_path));
            if (seed_override >= 0) sc.seed = static_cast<uint64_t>(seed_override);
            Simulation sim(sc);
            RunReport rep = sim.run();
            if (!report_path.empty()) spill(report_path, rep.to_json().dump(2) + "\n");
            if (!out_snapshot.empty()) spill(out_snapshot, sim.snapshot().to_json().dump() + "\n");
            std::cout << rep.to_text();
            return rep.invariants_held() ? 0 : 1;
        }
        if (replay_cmd->parsed()) {
            Snapshot snap = Snapshot::parse(slurp(snapshot_path));
            RunReport rep = replay(snap);
            bool same = rep.to_json() == snap.report;
            std::cout << (same ? "replay matches the stored report\n"
                               : "replay DIVERGES from the stored report\n");
            return (same && rep.invariants_held()) ? 0 : 1;
        }
        if (verify_cmd->parsed()) {
            Snapshot snap = Snapshot::parse(slurp(snapshot_path));
            bool ok = verify(snap);
            std::cout << (ok ? "snapshot verifies\n" : "snapshot FAILS verification\n");
            return ok ? 0 : 1;
        }
        if (report_cmd->parsed()) {
            Snapshot snap = Snapshot::parse(slurp(snapshot_path));
            if (format == "structured") {
                std::cout << snap.report.dump(2) << "\n";
            } else {
                RunReport rep;
                for (const auto& e : snap.report.value("events", nlohmann::json::array()))
                    rep.events.push_back({e.at("tick").get<uint64_t>(),
                                          e.at("event").get<std::string>(),
                                          e.at("accepted").get<bool>(),
                                          e.at("reason").get<std::string>()});
                rep.mc_blocks = snap.report.value("mc_blocks", nlohmann::json::array());
                rep.sidechain_tips = snap.report.value("sidechain_tips", nlohmann::json::array());
                for (const auto& v : snap.report.value("violations", nlohmann::json::array()))
                    rep.violations.push_back(v.get<std::string>());
                rep.report_digest = snap.report.value("report_digest", "");
                std::cout << rep.to_text();
            }
            bool held = snap.report.value("invariants_held", false);
            return held ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
