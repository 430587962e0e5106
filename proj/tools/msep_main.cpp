#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "msep/cli_ops.hpp"

using msep::cli::RunConfig;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// key=value config file ('#' comments, dashes and underscores equivalent).
// Applied before flag parsing, so flags always win.
void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream is(path);
    if (!is) throw msep::ConfigError("cannot open config file: " + path);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw msep::ConfigError("config line is not key=value: " + line);
        std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        for (char& c : key)
            if (c == '-') c = '_';
        try {
            if (key == "n") cfg.n = std::stoul(val);
            else if (key == "theta") cfg.theta = std::stod(val);
            else if (key == "k") cfg.k = std::stoul(val);
            else if (key == "seed") { cfg.seed = std::stoull(val); cfg.seed_set = true; }
            else if (key == "trials") cfg.trials = std::stoul(val);
            else if (key == "tau") cfg.tau = std::stod(val);
            else if (key == "max_weight") cfg.max_weight = std::stoul(val);
            else if (key == "budget") cfg.budget = std::stoull(val);
            else if (key == "pairs") cfg.pairs = std::stoul(val);
            else if (key == "sessions") cfg.sessions = std::stoul(val);
            else if (key == "m_sessions") cfg.m_sessions = std::stoul(val);
            else if (key == "key_len") cfg.key_len = std::stoul(val);
            else if (key == "rule") cfg.rule = val;
            else if (key == "out") cfg.out = val;
            else if (key == "format") cfg.format = val;
            else if (key == "dataset") cfg.dataset = val;
            else if (key == "n_grid") cfg.n_grid = val;
            else if (key == "threads") cfg.threads = static_cast<unsigned>(std::stoul(val));
            else if (key == "min_agreement") cfg.min_agreement = std::stod(val);
            else if (key == "min_key_rate") cfg.min_key_rate = std::stod(val);
            else if (key == "jsonl") cfg.jsonl = val == "true" || val == "1";
            else if (key == "check") cfg.check = val == "true" || val == "1";
            else if (key == "strict_seed") cfg.strict_seed = val == "true" || val == "1";
            else throw msep::ConfigError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw msep::ConfigError("bad value for " + key + ": " + val);
        }
    }
}

void add_common(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--n", cfg.n, "dimension");
    cmd->add_option("--theta", cfg.theta, "noise rate (default n^-0.5)");
    cmd->add_option("--k", cfg.k, "training-set size (default n^3)");
    cmd->add_option("--seed", cfg.seed, "master seed")
        ->each([&cfg](const std::string&) { cfg.seed_set = true; });
    cmd->add_option("--trials", cfg.trials, "trial count");
    cmd->add_option("--tau", cfg.tau, "threshold-rule tolerance");
    cmd->add_option("--out", cfg.out, "output path");
    cmd->add_option("--format", cfg.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    cmd->add_flag("--check", cfg.check, "exit 4 when the self-check fails");
    cmd->add_flag("--strict-seed", cfg.strict_seed, "require an explicit --seed");
    cmd->add_option("--config", cfg.config_path, "key=value config file; flags win");
}

int emit(const nlohmann::json& report, const RunConfig& cfg) {
    const std::string text =
        cfg.format == "csv" ? msep::cli::to_csv(report) : report.dump(2) + "\n";
    if (cfg.out.empty() || cfg.command == "gen-data") {
        std::cout << text;
    } else {
        std::ofstream os(cfg.out);
        if (!os) throw msep::IoError("cannot open " + cfg.out);
        os << text;
    }
    if (cfg.check && !msep::cli::check_passed(report)) return 4;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"msep: average-case modal-separation experiment workbench"};
    app.require_subcommand(1);

    RunConfig cfg;

    auto* gen = app.add_subcommand("gen-data", "sample a dataset to a binary file");
    add_common(gen, cfg);
    gen->add_flag("--jsonl", cfg.jsonl, "also write a JSONL debug export");

    auto* learn = app.add_subcommand("learn", "run the majority-vote learner on a file");
    add_common(learn, cfg);
    learn->add_option("--dataset", cfg.dataset, "dataset path")->required();

    auto* probe = app.add_subcommand("probe-hardness", "attack probes over an n-grid");
    add_common(probe, cfg);
    probe->add_option("--n-grid", cfg.n_grid, "comma-separated n values");
    probe->add_option("--pairs", cfg.pairs, "pairs per attack trial");
    probe->add_option("--max-weight", cfg.max_weight, "low-weight enumeration cap");
    probe->add_option("--budget", cfg.budget, "candidate-evaluation budget");

    auto* ba = app.add_subcommand("ba", "bit-agreement sessions");
    add_common(ba, cfg);
    ba->add_option("--sessions", cfg.sessions, "session count");
    ba->add_option("--rule", cfg.rule, "exact or threshold")
        ->check(CLI::IsMember({"exact", "threshold"}));
    ba->add_option("--min-agreement", cfg.min_agreement, "check-mode floor");
    ba->add_option("--budget", cfg.budget, "adversary candidate budget");
    ba->add_option("--max-weight", cfg.max_weight, "adversary enumeration cap");

    auto* ka = app.add_subcommand("ka", "key agreement via repetition + extraction");
    add_common(ka, cfg);
    ka->add_option("--m-sessions", cfg.m_sessions, "sessions per key");
    ka->add_option("--key-len", cfg.key_len, "output key length");
    ka->add_option("--rule", cfg.rule, "exact or threshold")
        ->check(CLI::IsMember({"exact", "threshold"}));
    ka->add_option("--min-key-rate", cfg.min_key_rate, "check-mode floor");

    auto* reduce = app.add_subcommand("reduce", "distinguisher and hybrid reductions");
    add_common(reduce, cfg);

    try {
        // the config file seeds defaults before flags are parsed, so explicit
        // flags always win
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            if (a == "--config" && i + 1 < argc)
                apply_config_file(argv[i + 1], cfg);
            else if (a.rfind("--config=", 0) == 0)
                apply_config_file(a.substr(9), cfg);
        }
    } catch (const msep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    // the reduction battery defaults to the small instance size
    if (cfg.command == "reduce" && sub->count("--n") == 0) cfg.n = 16;

    try {
        return emit(msep::cli::dispatch(cfg), cfg);
    } catch (const msep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const msep::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
