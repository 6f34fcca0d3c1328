// Command-line front end: run, serve, replay, metrics, gen-corpus.
#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "multibot/errors.hpp"
#include "multibot/orchestrator.hpp"
#include "multibot/server.hpp"

using namespace multibot;

namespace {

StreamServer* active_server = nullptr;

void on_signal(int)
{
    if (active_server) {
        active_server->stop();
    }
}

Roster default_roster()
{
    return {{"husky", "Husky", RobotKind::ground, default_capabilities(RobotKind::ground)},
            {"snapdragon", "Snapdragon", RobotKind::aerial, default_capabilities(RobotKind::aerial)}};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-robot dialogue and tasking simulator"};
    app.require_subcommand(1);

    SessionConfig cfg;
    std::string script_path;
    std::string out_path;
    std::string dm = "auto";
    std::string addressing = "explicit";
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "Run a scripted session headless and write its log");
    run->add_option("--map", cfg.map_path, "Map JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    run->add_option("--config", cfg.scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--script", script_path, "Script JSONL")->required()->check(CLI::ExistingFile);
    auto* seed_opt = run->add_option("--seed", seed, "Seed overriding the scenario");
    run->add_option("--out", out_path, "Log output (JSONL)")->required();
    run->add_option("--dm", dm, "Dialogue manager")->check(CLI::IsMember({"auto", "wizard-replay"}));
    run->add_option("--addressing", addressing, "Addressee mode")->check(CLI::IsMember({"explicit", "implicit"}));
    run->add_option("--threshold", cfg.threshold, "Retrieval threshold");

    auto* serve = app.add_subcommand("serve", "Serve a live session over WebSocket");
    serve->add_option("--port", cfg.port, "TCP port")->required();
    serve->add_option("--map", cfg.map_path, "Map JSON")->required()->check(CLI::ExistingFile);
    serve->add_option("--corpus", cfg.corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    serve->add_option("--config", cfg.scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    serve->add_option("--dm", dm, "Dialogue manager")->check(CLI::IsMember({"auto", "wizard"}));
    serve->add_option("--addressing", addressing, "Addressee mode")->check(CLI::IsMember({"explicit", "implicit"}));
    std::string address = "127.0.0.1";
    serve->add_option("--address", address, "Listen address");
    std::string serve_log;
    serve->add_option("--log", serve_log, "Write the session log here on shutdown");

    std::string log_path;
    auto* replay_cmd = app.add_subcommand("replay", "Print console frames rebuilt from a log");
    replay_cmd->add_option("log", log_path, "Session log")->required()->check(CLI::ExistingFile);

    auto* metrics_cmd = app.add_subcommand("metrics", "Print metrics computed from a log");
    metrics_cmd->add_option("log", log_path, "Session log")->required()->check(CLI::ExistingFile);

    std::string scenario_for_roster;
    auto* gen = app.add_subcommand("gen-corpus", "Generate the training corpus for a map");
    gen->add_option("--map", cfg.map_path, "Map JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out_path, "Corpus output (JSONL)")->required();
    gen->add_option("--config", scenario_for_roster, "Scenario JSON supplying the roster")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.dm_mode = *parse_dm_mode(dm);
        cfg.addressing = *parse_addressing_mode(addressing);
        if (*run) {
            if (*seed_opt) {
                cfg.seed = seed;
            }
            const HeadlessResult result = run_headless(cfg, load_script_file(script_path));
            write_log_file(out_path, result.log);
            std::cout << metrics_json(result.metrics).dump(2) << "\n";
        } else if (*serve) {
            Session session = Session::from_files(cfg);
            StreamServer server(session, cfg.port, address);
            active_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving on ws://" << address << ":" << server.port() << "\n";
            server.run();
            active_server = nullptr;
            if (!serve_log.empty()) {
                write_log_file(serve_log, session.log());
            }
        } else if (*replay_cmd) {
            for (const ojson& frame : replay(read_log_file(log_path))) {
                std::cout << frame.dump() << "\n";
            }
        } else if (*metrics_cmd) {
            std::cout << metrics_json(compute_metrics(read_log_file(log_path))).dump(2) << "\n";
        } else if (*gen) {
            std::ifstream in(cfg.map_path);
            std::stringstream ss;
            ss << in.rdbuf();
            const WorldMap map = load_map(ss.str());
            const Roster roster =
                scenario_for_roster.empty() ? default_roster() : make_roster(load_scenario_file(scenario_for_roster));
            const Corpus corpus = generate_corpus(map, roster);
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                throw ConfigError("cannot write " + out_path);
            }
            out << dump_corpus(corpus);
            std::cerr << "wrote " << corpus.size() << " pairs to " << out_path << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
