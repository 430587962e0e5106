#include "msep/cli_ops.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msep/dataset_io.hpp"
#include "msep/learner.hpp"
#include "msep/protocol.hpp"
#include "msep/reductions.hpp"
#include "msep/util.hpp"

namespace msep::cli {

using gf2::BitVec;
using gf2::Rng;
using nlohmann::json;
using taskgen::DataPoint;
using taskgen::LpnVectorTask;
using taskgen::Secret;
using taskgen::TaskParams;

namespace {

json params_echo(const RunConfig& cfg, const TaskParams& p) {
    json j;
    j["n"] = p.n;
    j["theta"] = p.theta;
    j["k"] = p.k;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    return j;
}

std::vector<std::size_t> parse_grid(const std::string& grid) {
    std::vector<std::size_t> out;
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const long v = std::stol(item);
        if (v < 2) throw ConfigError("n grid entries must be at least 2");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw ConfigError("empty n grid");
    return out;
}

double bit_correlation(std::uint64_t n11, std::uint64_t n1x, std::uint64_t nx1,
                       std::uint64_t total) {
    const double t = static_cast<double>(total);
    const double px = static_cast<double>(n1x) / t;
    const double py = static_cast<double>(nx1) / t;
    const double pxy = static_cast<double>(n11) / t;
    const double var = px * (1 - px) * py * (1 - py);
    if (var <= 0) return 0.0;
    return (pxy - px * py) / std::sqrt(var);
}

} // namespace

TaskParams task_params(const RunConfig& cfg) {
    TaskParams p = TaskParams::with_defaults(cfg.n);
    if (cfg.theta >= 0) p.theta = cfg.theta;
    if (cfg.k > 0) p.k = cfg.k;
    p.validate();
    return p;
}

json run_gen_data(const RunConfig& cfg) {
    const TaskParams p = task_params(cfg);
    if (cfg.out.empty()) throw ConfigError("gen-data: --out is required");

    const Rng root(cfg.seed, "gen-data");
    Rng crng = root.derive("concept", 0);
    const Secret secret = taskgen::sample_zeta(p, crng);

    dataset_io::DatasetHeader header{p.n, p.theta, p.k};
    std::ofstream os(cfg.out, std::ios::binary);
    if (!os) throw IoError("gen-data: cannot open " + cfg.out);
    dataset_io::DatasetWriter writer(os, header);
    std::vector<DataPoint> points;
    const bool keep = cfg.jsonl;
    taskgen::for_each_sample(p, secret, p.k, root.derive("data", 0),
                             [&](DataPoint&& pt) {
                                 writer.append(pt);
                                 if (keep) points.push_back(std::move(pt));
                             });
    writer.finish();

    const std::string digest = dataset_io::bitvec_digest(secret.w);
    json sidecar;
    sidecar["n"] = p.n;
    sidecar["theta"] = p.theta;
    sidecar["k"] = p.k;
    sidecar["seed"] = cfg.seed;
    sidecar["secret_digest"] = digest;
    std::ofstream sc(cfg.out + ".json");
    if (!sc) throw IoError("gen-data: cannot open sidecar");
    sc << sidecar.dump(2) << '\n';

    if (cfg.jsonl) dataset_io::export_jsonl(cfg.out + ".jsonl", header, points);

    json rep;
    rep["command"] = "gen-data";
    rep["params"] = params_echo(cfg, p);
    rep["results"] = {{"path", cfg.out},
                      {"records", p.k},
                      {"secret_digest", digest}};
    return rep;
}

json run_learn(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("learn: --dataset is required");
    auto [header, points] = dataset_io::read_dataset(cfg.dataset);
    if (points.empty()) throw IoError("learn: dataset is empty");

    std::string expected_digest;
    {
        std::ifstream sc(cfg.dataset + ".json");
        if (sc) {
            json sidecar = json::parse(sc, nullptr, true);
            if (sidecar.contains("secret_digest"))
                expected_digest = sidecar["secret_digest"].get<std::string>();
        }
    }

    const std::size_t test_count = std::max<std::size_t>(1, points.size() / 10);
    const std::size_t train_count = points.size() - test_count;
    if (train_count == 0) throw ConfigError("learn: dataset too small to split");

    const std::span<const DataPoint> all(points);
    auto [h, stats] = learner::learn_amu(all.subspan(0, train_count), header.n);
    const auto test_pairs = taskgen::project_yz(all.subspan(train_count));
    const double l0 = learner::empirical_risk(h, test_pairs, learner::Loss::l0);
    const double l01 = learner::empirical_risk(h, test_pairs, learner::Loss::l01);
    const std::string digest = dataset_io::bitvec_digest(h.w_hat);
    const bool recovered = !expected_digest.empty() && digest == expected_digest;

    json rep;
    rep["command"] = "learn";
    rep["params"] = {{"n", header.n},
                     {"theta", header.theta},
                     {"seed", cfg.seed},
                     {"dataset", cfg.dataset},
                     {"train_records", train_count},
                     {"test_records", test_count}};
    rep["results"] = {{"recovered", recovered},
                      {"hypothesis_digest", digest},
                      {"expected_digest", expected_digest},
                      {"l0_risk", l0},
                      {"l01_risk", l01},
                      {"vote_stats",
                       {{"min_bin_size", stats.min_bin_size},
                        {"has_empty_bin", stats.has_empty_bin},
                        {"total_votes", stats.total_votes()}}}};
    rep["check"] = {{"passed", recovered}};
    return rep;
}

json run_probe_hardness(const RunConfig& cfg) {
    const auto grid = parse_grid(cfg.n_grid);
    const Rng root(cfg.seed, "probe");

    json per_n = json::array();
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const std::size_t n = grid[gi];
        TaskParams p = TaskParams::with_defaults(n);
        p.k = cfg.pairs;

        std::vector<std::uint8_t> lw_success(cfg.trials, 0), lw_exhausted(cfg.trials, 0);
        util::parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
            Rng r = root.derive("lw", gi * 100000 + t);
            Rng crng = r.derive("concept", 0);
            const Secret secret = taskgen::sample_zeta(p, crng);
            const auto data = taskgen::sample_dataset(p, secret, cfg.pairs, r);
            const auto pairs = taskgen::project_yz(data);
            learner::LowWeightOptions opt;
            opt.max_weight = std::min(cfg.max_weight, n);
            opt.budget = cfg.budget;
            const auto out = learner::lowweight_attack(pairs, n, opt);
            lw_success[t] = out.secret && out.secret->w == secret.w;
            lw_exhausted[t] = out.budget_exceeded;
        });

        const std::size_t gauss_trials = std::min<std::size_t>(cfg.trials, 20);
        std::vector<std::uint8_t> gauss_success(gauss_trials, 0);
        util::parallel_for(gauss_trials, cfg.threads, [&](std::size_t t) {
            Rng r = root.derive("gauss", gi * 100000 + t);
            Rng crng = r.derive("concept", 0);
            const Secret secret = taskgen::sample_zeta(p, crng);
            const auto data = taskgen::sample_dataset(p, secret, cfg.pairs, r);
            const auto pairs = taskgen::project_yz(data);
            learner::GaussOptions gopt;
            gopt.trials = 4000;
            gopt.theta = p.theta;
            Rng arng = r.derive("attack", 0);
            const auto out = learner::gauss_attack(pairs, n, gopt, arng);
            gauss_success[t] = out.secret && out.secret->w == secret.w;
        });

        std::size_t lw_ok = 0, lw_bud = 0, g_ok = 0;
        for (auto v : lw_success) lw_ok += v;
        for (auto v : lw_exhausted) lw_bud += v;
        for (auto v : gauss_success) g_ok += v;

        per_n.push_back(
            {{"n", n},
             {"lowweight_success_rate",
              static_cast<double>(lw_ok) / static_cast<double>(cfg.trials)},
             {"lowweight_budget_exhausted_rate",
              static_cast<double>(lw_bud) / static_cast<double>(cfg.trials)},
             {"gauss_success_rate",
              static_cast<double>(g_ok) / static_cast<double>(gauss_trials)},
             {"gauss_trials", gauss_trials}});
    }

    // rho_{X,Z} probe: per-bit correlation between x and the label, measured
    // at the smallest grid point.
    const std::size_t cn = grid.front();
    TaskParams cp = TaskParams::with_defaults(cn);
    const std::size_t samples = 60000;
    std::vector<std::uint64_t> x_ones(cn, 0), z_ones(cn + 1, 0),
        joint(cn * (cn + 1), 0);
    {
        Rng r = root.derive("xz-corr", 0);
        Rng crng = r.derive("concept", 0);
        const Secret secret = taskgen::sample_zeta(cp, crng);
        taskgen::for_each_sample(cp, secret, samples, r, [&](DataPoint&& pt) {
            for (std::size_t i = 0; i < cn; ++i) {
                const bool xi = pt.x.xvec.get(i);
                if (xi) ++x_ones[i];
                for (std::size_t j = 0; j <= cn; ++j) {
                    const bool zj = j < cn ? pt.z.zvec.get(j) : (pt.z.zbit != 0);
                    if (i == 0 && zj) ++z_ones[j];
                    if (xi && zj) ++joint[i * (cn + 1) + j];
                }
            }
        });
    }
    double max_corr = 0.0;
    for (std::size_t i = 0; i < cn; ++i)
        for (std::size_t j = 0; j <= cn; ++j)
            max_corr = std::max(max_corr,
                                std::fabs(bit_correlation(joint[i * (cn + 1) + j],
                                                          x_ones[i], z_ones[j],
                                                          samples)));

    json rep;
    rep["command"] = "probe-hardness";
    rep["params"] = {{"seed", cfg.seed},      {"trials", cfg.trials},
                     {"pairs", cfg.pairs},    {"max_weight", cfg.max_weight},
                     {"budget", cfg.budget},  {"n_grid", cfg.n_grid}};
    rep["results"] = {{"per_n", per_n},
                      {"xz_probe", {{"n", cn},
                                    {"samples", samples},
                                    {"max_abs_correlation", max_corr}}}};

    const double small_rate = per_n.front()["lowweight_success_rate"].get<double>();
    const double large_rate = per_n.back()["lowweight_success_rate"].get<double>();
    rep["check"] = {{"passed", small_rate >= 0.9 && large_rate <= 0.05 &&
                                   max_corr <= 0.02}};
    return rep;
}

json run_ba(const RunConfig& cfg) {
    const TaskParams p = task_params(cfg);
    const LpnVectorTask task(p);
    const protocol::DecisionRule rule{cfg.rule == "exact"
                                          ? protocol::DecisionKind::exact
                                          : protocol::DecisionKind::threshold,
                                      cfg.tau};
    const Rng root(cfg.seed, "ba");

    std::vector<std::uint8_t> agree(cfg.sessions, 0), bb(cfg.sessions, 0);
    std::vector<std::uint8_t> coin_ok(cfg.sessions, 0), lw_ok(cfg.sessions, 0);
    const auto lw_adv = protocol::lowweight_transcript_adversary(
        {std::min(cfg.max_weight, p.n), cfg.budget, 0.2, 150});

    util::parallel_for(cfg.sessions, cfg.threads, [&](std::size_t s) {
        Rng srng = root.derive("sess", s);
        auto [res, tr] = protocol::run_ba_session(task, p.k, rule, srng);
        agree[s] = res.b_a == res.b_b;
        bb[s] = static_cast<std::uint8_t>(res.b_b);
        Rng arng = root.derive("coin", s);
        coin_ok[s] = static_cast<int>(arng.next_bit()) == res.b_b;
        lw_ok[s] = lw_adv(tr) == res.b_b;
    });

    std::size_t n_agree = 0, n_b1 = 0, agree_b1 = 0, agree_b0 = 0, coin = 0, lw = 0;
    for (std::size_t s = 0; s < cfg.sessions; ++s) {
        n_agree += agree[s];
        coin += coin_ok[s];
        lw += lw_ok[s];
        if (bb[s]) {
            ++n_b1;
            agree_b1 += agree[s];
        } else {
            agree_b0 += agree[s];
        }
    }
    const std::size_t n_b0 = cfg.sessions - n_b1;
    const double agreement =
        static_cast<double>(n_agree) / static_cast<double>(cfg.sessions);

    json rep;
    rep["command"] = "ba";
    rep["params"] = params_echo(cfg, p);
    rep["params"]["tau"] = cfg.tau;
    rep["params"]["rule"] = cfg.rule;
    rep["params"]["sessions"] = cfg.sessions;
    rep["results"] = {
        {"agreement", agreement},
        {"sessions", cfg.sessions},
        {"b1_sessions", n_b1},
        {"agree_given_b1",
         n_b1 ? static_cast<double>(agree_b1) / static_cast<double>(n_b1) : 0.0},
        {"agree_given_b0",
         n_b0 ? static_cast<double>(agree_b0) / static_cast<double>(n_b0) : 0.0},
        {"adversaries",
         {{"coin_flip_accuracy",
           static_cast<double>(coin) / static_cast<double>(cfg.sessions)},
          {"lowweight_accuracy",
           static_cast<double>(lw) / static_cast<double>(cfg.sessions)}}}};
    rep["check"] = {{"passed", agreement >= cfg.min_agreement}};
    return rep;
}

json run_ka(const RunConfig& cfg) {
    const TaskParams p = task_params(cfg);
    const LpnVectorTask task(p);
    const protocol::DecisionRule rule{cfg.rule == "exact"
                                          ? protocol::DecisionKind::exact
                                          : protocol::DecisionKind::threshold,
                                      cfg.tau};
    const Rng root(cfg.seed, "ka");

    std::vector<std::uint8_t> equal(cfg.trials, 0);
    std::vector<std::size_t> raw_errors(cfg.trials, 0);
    util::parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        Rng r = root.derive("run", t);
        auto [ka, transcripts] = protocol::run_ka(task, p.k, cfg.m_sessions,
                                                  cfg.key_len, rule, r, {}, false);
        equal[t] = ka.key_a == ka.key_b;
        raw_errors[t] = ka.raw_bit_errors;
    });

    std::size_t eq = 0, err_sum = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        eq += equal[t];
        err_sum += raw_errors[t];
    }
    const double key_rate = static_cast<double>(eq) / static_cast<double>(cfg.trials);

    json rep;
    rep["command"] = "ka";
    rep["params"] = params_echo(cfg, p);
    rep["params"]["tau"] = cfg.tau;
    rep["params"]["m_sessions"] = cfg.m_sessions;
    rep["params"]["key_len"] = cfg.key_len;
    rep["results"] = {{"key_equal_rate", key_rate},
                      {"mean_raw_bit_errors",
                       static_cast<double>(err_sum) / static_cast<double>(cfg.trials)},
                      {"runs", cfg.trials}};
    rep["check"] = {{"passed", key_rate >= cfg.min_key_rate}};
    return rep;
}

json run_reduce(const RunConfig& cfg) {
    TaskParams p = task_params(cfg);

    reductions::ReductionBudget budget;
    budget.m_train = p.k;
    const std::size_t cols = budget.blocks() * p.n;
    const Rng root(cfg.seed, "reduce");

    std::vector<std::uint8_t> cheat_acc(2 * cfg.trials, 0), rand_acc(2 * cfg.trials, 0);
    util::parallel_for(2 * cfg.trials, cfg.threads, [&](std::size_t i) {
        const taskgen::World world =
            i < cfg.trials ? taskgen::World::planted : taskgen::World::uniform;
        Rng r = root.derive("inst", i);
        auto inst = taskgen::sample_dlpn(p.n, cols, p.theta,
                                         taskgen::SecretMode::bernoulli_secret,
                                         world, r);
        BitVec s = inst.world == taskgen::World::planted
                       ? inst.secret
                       : gf2::bernoulli_vec(p.n, p.theta, r);

        auto cheat = std::make_shared<reductions::PlantedAwareCheat>(s, p.theta);
        auto d_cheat = reductions::build_dlpn_distinguisher(
            cheat, p, budget, root.derive("dc", i),
            [cheat](const Secret& c) { cheat->receive_concept(c); });
        cheat_acc[i] = static_cast<std::uint8_t>(d_cheat(inst.A, inst.q));

        auto rand_learner =
            std::make_shared<reductions::RandomHypothesisLearner>(p.n, p.theta);
        auto d_rand = reductions::build_dlpn_distinguisher(rand_learner, p, budget,
                                                           root.derive("dr", i));
        rand_acc[i] = static_cast<std::uint8_t>(d_rand(inst.A, inst.q));
    });

    std::size_t cp = 0, cu = 0, rp = 0, ru = 0;
    for (std::size_t i = 0; i < cfg.trials; ++i) {
        cp += cheat_acc[i];
        cu += cheat_acc[cfg.trials + i];
        rp += rand_acc[i];
        ru += rand_acc[cfg.trials + i];
    }
    const double t = static_cast<double>(cfg.trials);
    const double cheat_adv = std::fabs(cp / t - cu / t);
    const double rand_adv = std::fabs(rp / t - ru / t);

    // hybrid machinery on the deterministic binary toy task
    const taskgen::ToyParityTask toy(24, 0.0);
    Rng hrng = root.derive("hybrid", 0);
    Rng crng = hrng.derive("concept", 0);
    const Secret psi = toy.sample_concept(crng);
    const std::size_t hk = 7;

    // accepts iff every label is the planted one, so acceptance climbs with j
    reductions::TranscriptDistinguisher label_check =
        [&toy, &psi](std::span<const std::pair<taskgen::ModalityY,
                                                   taskgen::LabelZ>> s) -> int {
        Rng dummy(0, "det");
        for (const auto& [y, z] : s)
            if (toy.label(psi, y, dummy).zbit != z.zbit) return 0;
        return 1;
    };
    auto table = reductions::hybrid_advantage(label_check, toy, psi, hk, 2000, hrng);
    const auto diffs = table.count_diffs();
    std::int64_t diff_sum = 0;
    for (auto d : diffs) diff_sum += d;
    const bool telescoping_exact =
        diff_sum == static_cast<std::int64_t>(table.accept_counts.back()) -
                        static_cast<std::int64_t>(table.accept_counts.front());

    // predictor accuracy with the slot-checking oracle and with a constant
    std::size_t oracle_hits = 0, const_hits = 0;
    const std::size_t ptrials = 2000;
    Rng prng = root.derive("pmu", 0);
    for (std::size_t t2 = 0; t2 < ptrials; ++t2) {
        std::vector<DataPoint> train;
        for (std::size_t i = 0; i < hk; ++i) train.push_back(toy.sample_point(psi, prng));
        auto [xs, ys] = toy.sample_unlabeled(prng);
        Rng dummy(0, "det");
        const int truth = toy.label(psi, ys, dummy).zbit;

        reductions::TranscriptDistinguisher oracle =
            [&toy, &psi, &ys](std::span<const std::pair<taskgen::ModalityY,
                                                            taskgen::LabelZ>> s) -> int {
            Rng d2(0, "det");
            for (const auto& [y, z] : s)
                if (y.yvec == ys.yvec)
                    return toy.label(psi, y, d2).zbit == z.zbit ? 0 : 1;
            return 0;
        };
        oracle_hits += reductions::predictor_pmu(oracle, toy, train, xs, ys, prng) == truth;

        reductions::TranscriptDistinguisher constant =
            [](std::span<const std::pair<taskgen::ModalityY, taskgen::LabelZ>>) {
                return 0;
            };
        const_hits += reductions::predictor_pmu(constant, toy, train, xs, ys, prng) == truth;
    }

    json rep;
    rep["command"] = "reduce";
    rep["params"] = {{"n", p.n},     {"theta", p.theta},
                     {"k", p.k},     {"seed", cfg.seed},
                     {"trials", cfg.trials}, {"t_budget", budget.t_budget}};
    rep["results"] = {
        {"cheat_accept_planted", cp / t},
        {"cheat_accept_uniform", cu / t},
        {"cheat_advantage", cheat_adv},
        {"random_accept_planted", rp / t},
        {"random_accept_uniform", ru / t},
        {"random_advantage", rand_adv},
        {"hybrid",
         {{"accept_rates", table.rates()},
          {"mean_diff", table.mean_diff()},
          {"end_gap", table.end_gap()},
          {"telescoping_exact", telescoping_exact}}},
        {"predictor",
         {{"oracle_accuracy", static_cast<double>(oracle_hits) / ptrials},
          {"constant_accuracy", static_cast<double>(const_hits) / ptrials}}}};
    rep["check"] = {{"passed", cheat_adv >= 0.9 && rand_adv <= 0.05 &&
                                   telescoping_exact}};
    return rep;
}

json dispatch(const RunConfig& cfg) {
    if (cfg.strict_seed && !cfg.seed_set)
        throw ConfigError("--strict-seed requires an explicit --seed");
    json rep;
    if (cfg.command == "gen-data")
        rep = run_gen_data(cfg);
    else if (cfg.command == "learn")
        rep = run_learn(cfg);
    else if (cfg.command == "probe-hardness")
        rep = run_probe_hardness(cfg);
    else if (cfg.command == "ba")
        rep = run_ba(cfg);
    else if (cfg.command == "ka")
        rep = run_ka(cfg);
    else if (cfg.command == "reduce")
        rep = run_reduce(cfg);
    else
        throw ConfigError("unknown command: " + cfg.command);

    const auto now = std::chrono::system_clock::now().time_since_epoch();
    rep["meta"] = {
        {"timestamp",
         std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
    return rep;
}

namespace {

void flatten(const json& j, const std::string& prefix, std::ostringstream& os) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            if (prefix.empty() && key == "meta") continue;
            flatten(value, prefix.empty() ? key : prefix + "." + key, os);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten(j[i], prefix + "." + std::to_string(i), os);
    } else {
        os << prefix << ',' << j.dump() << '\n';
    }
}

} // namespace

std::string to_csv(const json& report) {
    std::ostringstream os;
    os << "key,value\n";
    flatten(report, "", os);
    return os.str();
}

bool check_passed(const json& report) {
    if (!report.contains("check")) return true;
    return report["check"].value("passed", true);
}

} // namespace msep::cli
