// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "lsinit/error.hpp"
#include "lsinit/experiment.hpp"
#include "lsinit/init.hpp"
#include "lsinit/losses.hpp"
#include "lsinit/stats.hpp"
#include "lsinit/synth.hpp"

using namespace lsinit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("violated: " + what);
        }
    }
    void note(const std::string& what) { notes.push_back(what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
    std::printf("%s criterion %d: %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str());
    std::size_t shown = 0;
    for (const auto& n : v.notes) {
        if (++shown > 12) {
            std::printf("    ... %zu more\n", v.notes.size() - 12);
            break;
        }
        std::printf("    %s\n", n.c_str());
    }
    std::fflush(stdout);
    if (!v.pass) ++failures;
}

void guarded(int id, const std::string& title, const std::function<Verdict()>& body) {
    try {
        report(id, title, body());
    } catch (const std::exception& e) {
        Verdict v;
        v.require(false, std::string("exception: ") + e.what());
        report(id, title, v);
    }
}

// Balanced Gaussian instances shared by the closed-form checks.
std::vector<FeatureDataset> ridge_instances() {
    std::vector<FeatureDataset> out;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const std::size_t classes = k % 2 == 0 ? 3 : 10;
        const std::size_t dim = (k / 2) % 2 == 0 ? 8 : 64;
        const std::size_t per_class = std::min<std::size_t>(2000 / classes, 60 + 17 * k);
        out.push_back(testutil::gaussian_clusters(classes, dim, per_class, 1.0, 1.0, 1000 + k));
    }
    return out;
}

ClassStatistics stats_of(const FeatureDataset& d) { return compute_stats(d, testutil::all_indices(d)); }

// ---------------------------------------------------------------- acceptance stream

constexpr std::size_t kSeeds = 3;

ExperimentConfig stream_config(std::uint64_t seed, LossType loss) {
    ExperimentConfig cfg;
    SynthSpec s;
    s.class_count = 60;
    s.dim = 64;
    s.mean_layout = MeanLayout::simplex_etf;
    s.within_std = 1.0;
    s.mean_scale = 4.0 * s.within_std;
    s.samples_per_class = 200;
    s.test_samples_per_class = 100;
    s.seed = seed;
    cfg.synthetic = s;
    cfg.schedule = {10, 5, 10, seed};
    cfg.train.iterations_per_task = 300;
    cfg.train.buffer_capacity = 2000;
    cfg.train.seed = seed;
    cfg.train.loss.type = loss;
    cfg.initializers = {InitKind::random, InitKind::class_mean, InitKind::least_square};
    return cfg;
}

struct StreamRuns {
    std::vector<ExperimentConfig> configs;
    std::vector<ExperimentOutput> outputs;
    double seconds = 0.0;
};

StreamRuns run_stream(LossType loss, const std::function<void(ExperimentConfig&)>& tweak = {}) {
    StreamRuns runs;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        ExperimentConfig cfg = stream_config(seed, loss);
        if (tweak) tweak(cfg);
        runs.outputs.push_back(run_experiment(cfg));
        runs.configs.push_back(std::move(cfg));
    }
    runs.seconds = seconds_since(t0);
    return runs;
}

const ExperimentResult& run_of(const ExperimentOutput& out, InitKind kind) {
    for (const auto& r : out.runs)
        if (r.init == kind) return r;
    throw Error(ErrorKind::InvalidArgument, "initializer missing from output");
}

std::map<int, const EvalRecord*> boundaries(const EvalLog& log) {
    std::map<int, const EvalRecord*> out;
    for (const auto& r : log.records)
        if (r.task_id > 1 && r.iteration == 0) out[r.task_id] = &r;
    return out;
}

// Head classes at a boundary: pretraining classes plus every CL task up to this one.
double chance_at(int task_id) { return 100.0 / (10.0 + 10.0 * (task_id - 1)); }

} // namespace

int main() {
    const auto t_all = Clock::now();

    guarded(1, "closed-form ridge solution is the optimum of the ridge objective", [] {
        Verdict v;
        const auto t0 = Clock::now();
        const double lambda = kDefaultRidgeLambda;
        double worst_grad = 0.0, worst_gd = 0.0;
        std::size_t max_steps = 0;
        for (const auto& d : ridge_instances()) {
            const auto p = testutil::ridge_problem(d);
            const Matrix w = least_square_weights(stats_of(d), lambda);
            const double g = frobenius_norm(testutil::ridge_gradient(p, w, lambda)) / testutil::ridge_target_norm(p);
            std::size_t steps = 0;
            const Matrix gd = testutil::ridge_gradient_descent(p, lambda, 1e-2, 100000, 1e-12, &steps);
            const double r = testutil::rel_diff(gd, w);
            worst_grad = std::max(worst_grad, g);
            worst_gd = std::max(worst_gd, r);
            max_steps = std::max(max_steps, steps);
            v.require(g < 1e-8, fmt("relative gradient %.3g at C=%zu d=%u", g, p.classes, d.dim));
            v.require(r < 1e-5, fmt("gradient descent off by %.3g at C=%zu d=%u", r, p.classes, d.dim));
        }
        const double secs = seconds_since(t0);
        v.require(secs < 60.0, fmt("took %.1f s", secs));
        v.note(fmt("20 instances: max relative gradient %.3g, max GD deviation %.3g, GD steps <= %zu, %.1f s",
                   worst_grad, worst_gd, max_steps, secs));
        return v;
    });

    guarded(2, "statistics form equals the direct ridge solve under class balance", [] {
        Verdict v;
        double worst = 0.0;
        for (const auto& d : ridge_instances()) {
            const auto p = testutil::ridge_problem(d);
            const auto [zc, y] = testutil::ridge_columns(p);
            const double n = static_cast<double>(d.size());
            const double r = testutil::rel_diff(direct_ridge_weights(zc, y, n * kDefaultRidgeLambda),
                                                least_square_weights(stats_of(d), kDefaultRidgeLambda));
            worst = std::max(worst, r);
            v.require(r < 1e-6, fmt("relative difference %.3g at C=%zu d=%u", r, p.classes, d.dim));
        }
        v.note(fmt("max relative difference %.3g over 20 instances", worst));
        return v;
    });

    guarded(3, "hand-derived two-class instance", [] {
        Verdict v;
        const Matrix z{{1, 1}, {-1, 1}};
        const Matrix w = least_square_weights(compute_stats(z, std::vector<int>{0, 1}), 0.0);
        const double err = max_abs(w - Matrix{{0.5, 0.5}, {-0.5, 0.5}});
        v.require(err <= 1e-12, fmt("weights off by %.3g", err));
        const Matrix logits = matmul_nt(z, w);
        const double logit_err = max_abs(logits - Matrix::identity(2));
        v.require(logit_err <= 1e-12, fmt("logits off one-hot by %.3g", logit_err));
        v.note(fmt("max weight error %.3g, max logit error %.3g", err, logit_err));
        return v;
    });

    guarded(4, "analytic loss gradients agree with central differences", [] {
        Verdict v;
        const auto t0 = Clock::now();
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> n(0.0, 3.0);
        for (LossType t : {LossType::ce, LossType::mse, LossType::squentropy}) {
            LossKind kind;
            kind.type = t;
            double worst = 0.0;
            for (int trial = 0; trial < 1000; ++trial) {
                const std::size_t c = 2 + rng() % 19;
                const int y = static_cast<int>(rng() % c);
                Vector u(c);
                for (double& x : u) x = n(rng);
                Vector grad(c);
                loss_and_grad(kind, u, y, grad);
                for (std::size_t k = 0; k < c; ++k) {
                    const double keep = u[k], h = 1e-5;
                    u[k] = keep + h;
                    const double up = loss_value(kind, u, y);
                    u[k] = keep - h;
                    const double down = loss_value(kind, u, y);
                    u[k] = keep;
                    const double fd = (up - down) / (2 * h);
                    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
                }
            }
            v.require(worst < 1e-6, fmt("%s worst relative error %.3g", std::string(to_string(t)).c_str(), worst));
            v.note(fmt("%s: worst relative error %.3g over 1000 pairs", std::string(to_string(t)).c_str(), worst));
        }
        const double secs = seconds_since(t0);
        v.require(secs < 10.0, fmt("took %.2f s", secs));
        return v;
    });

    guarded(5, "neural-collapse metric suite on constructed inputs", [] {
        Verdict v;
        SynthSpec s;
        s.class_count = 10;
        s.dim = 64;
        s.within_std = 0.0;
        s.samples_per_class = 20;
        const double n1 = nc1(stats_of(gen_stream(s).first));

        // Feature files hold floats, so the exact simplex is checked from the generated means directly.
        const Matrix means = gen_simplex_etf_means(10, 64, 4.0);
        Matrix z(10, 65);
        std::vector<int> labels;
        for (std::size_t c = 0; c < 10; ++c) {
            labels.push_back(static_cast<int>(c));
            for (std::size_t k = 0; k < 64; ++k) z(c, k) = means(k, c);
            z(c, 64) = 1.0;
        }
        const ClassStatistics st = compute_stats(z, labels);
        Matrix centered_means(10, 64);
        for (std::size_t c = 0; c < 10; ++c)
            for (std::size_t k = 0; k < 64; ++k) centered_means(c, k) = st.class_means(k, c) - st.mu_global[k];
        const double n2 = nc2(centered_means);
        const double n3 = nc3(centered_means, st);

        const ClassStatistics noisy = stats_of(testutil::gaussian_clusters(6, 9, 20, 1.0, 0.5, 77));
        const Matrix w = testutil::random_matrix(6, 9, 78);
        Vector b = matvec(w, std::span<const double>(noisy.mu_global).first(9));
        for (double& x : b) x = -x;
        const double n4 = nc4(w, b, noisy);

        v.require(n2 < 1e-8, fmt("nc2 of simplex means %.3g", n2));
        v.require(n1 < 1e-12, fmt("nc1 of collapsed data %.3g", n1));
        v.require(n4 < 1e-12, fmt("nc4 with cancelling bias %.3g", n4));
        v.require(n3 < 1e-8, fmt("nc3 of self-dual head %.3g", n3));
        v.note(fmt("nc1 %.3g, nc2 %.3g, nc3 %.3g, nc4 %.3g", n1, n2, n3, n4));
        return v;
    });

    // The CE stream feeds criteria 6, 7 and 10.
    std::optional<StreamRuns> ce;
    std::string ce_error;
    try {
        ce = run_stream(LossType::ce);
    } catch (const std::exception& e) {
        ce_error = e.what();
    }
    auto need_ce = [&]() -> const StreamRuns& {
        if (!ce) throw Error(ErrorKind::InvalidArgument, "acceptance stream failed: " + ce_error);
        return *ce;
    };

    guarded(6, "iteration-0 new-task accuracy ordering at every task boundary", [&] {
        Verdict v;
        const StreamRuns& runs = need_ce();
        for (std::size_t s = 0; s < runs.outputs.size(); ++s) {
            const auto rnd = boundaries(run_of(runs.outputs[s], InitKind::random).log);
            const auto cm = boundaries(run_of(runs.outputs[s], InitKind::class_mean).log);
            const auto ls = boundaries(run_of(runs.outputs[s], InitKind::least_square).log);
            std::string line = fmt("seed %zu  random/class_mean/least_square:", s);
            for (const auto& [task, r] : rnd) {
                const double chance = chance_at(task);
                const double a_r = r->acc_new, a_c = cm.at(task)->acc_new, a_l = ls.at(task)->acc_new;
                line += fmt("  t%d %.1f/%.1f/%.1f", task, a_r, a_c, a_l);
                v.require(a_r <= chance + 2.0,
                          fmt("seed %zu task %d: random %.2f > chance %.2f + 2", s, task, a_r, chance));
                v.require(a_l >= 5.0 * chance,
                          fmt("seed %zu task %d: least_square %.2f < 5 x chance %.2f", s, task, a_l, chance));
                v.require(a_l >= a_c - 2.0,
                          fmt("seed %zu task %d: least_square %.2f < class_mean %.2f - 2", s, task, a_l, a_c));
            }
            v.notes.insert(v.notes.begin() + static_cast<std::ptrdiff_t>(s), line);
        }
        return v;
    });

    guarded(7, "iteration-0 loss ordering, efficiency gain and final accuracy", [&] {
        Verdict v;
        const StreamRuns& runs = need_ce();
        double g_ls = 0.0, g_cm = 0.0;
        for (std::size_t s = 0; s < runs.outputs.size(); ++s) {
            const auto& out = runs.outputs[s];
            const auto& rnd = run_of(out, InitKind::random);
            const auto& cm = run_of(out, InitKind::class_mean);
            const auto& ls = run_of(out, InitKind::least_square);
            const auto br = boundaries(rnd.log), bc = boundaries(cm.log), bl = boundaries(ls.log);
            std::string line = fmt("seed %zu  loss ls/cm/random:", s);
            for (const auto& [task, r] : br) {
                const double l_r = r->loss_new, l_c = bc.at(task)->loss_new, l_l = bl.at(task)->loss_new;
                line += fmt("  t%d %.3f/%.3f/%.3f", task, l_l, l_c, l_r);
                v.require(l_l < l_c && l_c < l_r,
                          fmt("seed %zu task %d: loss ls %.3f, class_mean %.3f, random %.3f", s, task, l_l, l_c, l_r));
            }
            const double gl = efficiency_gain(rnd.log, ls.log).mean_gain;
            const double gc = efficiency_gain(rnd.log, cm.log).mean_gain;
            g_ls += gl / static_cast<double>(runs.outputs.size());
            g_cm += gc / static_cast<double>(runs.outputs.size());
            const double fa_r = rnd.log.records.back().acc_all, fa_l = ls.log.records.back().acc_all;
            line += fmt("  | G ls %.2f cm %.2f | final A_all ls %.2f random %.2f", gl, gc, fa_l, fa_r);
            v.require(fa_l >= fa_r - 0.5, fmt("seed %zu: final A_all ls %.2f < random %.2f - 0.5", s, fa_l, fa_r));
            v.notes.insert(v.notes.begin() + static_cast<std::ptrdiff_t>(s), line);
        }
        v.require(g_ls > 1.5, fmt("mean G(least_square) %.3f <= 1.5", g_ls));
        v.require(g_cm > 1.2, fmt("mean G(class_mean) %.3f <= 1.2", g_cm));
        v.require(runs.seconds < 300.0, fmt("stream took %.1f s", runs.seconds));
        v.notes.insert(v.notes.begin() + static_cast<std::ptrdiff_t>(runs.outputs.size()),
                       fmt("mean G least_square %.3f, class_mean %.3f; %zu seeds in %.1f s", g_ls, g_cm,
                           runs.outputs.size(), runs.seconds));
        return v;
    });

    guarded(8, "LS deviation vanishes at the solution and shrinks under MSE training", [&] {
        Verdict v;
        // The unscaled squared error (kappa = beta = 1) is the objective whose minimizer is W_LS.
        const StreamRuns mse = run_stream(LossType::mse, [](ExperimentConfig& c) {
            c.train.loss.kappa = 1.0;
            c.train.loss.beta = 1.0;
        });
        double worst_self = 0.0;
        for (std::size_t s = 0; s < mse.configs.size(); ++s) {
            const auto [train, test] = gen_stream(*mse.configs[s].synthetic);
            const ClassStatistics st = stats_of(train);
            const double self = ls_deviation(least_square_weights(st, kDefaultRidgeLambda), st, kDefaultRidgeLambda);
            worst_self = std::max(worst_self, std::abs(self));
            v.require(std::abs(self) < 1e-9, fmt("seed %zu: D_LS(W_LS) = %.3g", s, self));

            for (InitKind kind : {InitKind::random, InitKind::class_mean}) {
                std::map<int, std::vector<double>> per_task;
                for (const auto& r : run_of(mse.outputs[s], kind).log.records)
                    if (r.task_id > 1 && r.d_ls && per_task[r.task_id].size() < 5) per_task[r.task_id].push_back(*r.d_ls);
                for (const auto& [task, seq] : per_task) {
                    for (std::size_t k = 1; k < seq.size(); ++k)
                        v.require(seq[k] <= seq[k - 1] + 1e-6,
                                  fmt("seed %zu %s task %d: D_LS rose %.6g -> %.6g", s,
                                      std::string(to_string(kind)).c_str(), task, seq[k - 1], seq[k]));
                    if (s == 0 && task == 2) {
                        std::string line = fmt("seed 0 %s task 2 D_LS:", std::string(to_string(kind)).c_str());
                        for (double d : seq) line += fmt(" %.4g", d);
                        v.note(line);
                    }
                }
            }
            if (s == 0) {
                std::string line = "seed 0 least_square task 2 D_LS (starts at the solution):";
                for (const auto& r : run_of(mse.outputs[s], InitKind::least_square).log.records)
                    if (r.task_id == 2 && r.d_ls && r.iteration <= 200) line += fmt(" %.3g", *r.d_ls);
                v.note(line);
            }
        }
        v.note(fmt("max |D_LS(W_LS)| %.3g", worst_self));
        return v;
    });

    guarded(9, "repeated runs produce byte-identical outputs", [] {
        Verdict v;
        const fs::path dir = fs::temp_directory_path() / "lsinit_acceptance_determinism";
        fs::remove_all(dir);
        fs::create_directories(dir);
        ExperimentConfig cfg = stream_config(0, LossType::ce);
        std::ofstream(dir / "config.json") << config_to_json(cfg).dump(2);
        auto slurp = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const int a = cli::cmd_run(dir / "config.json", dir / "a");
        const int b = cli::cmd_run(dir / "config.json", dir / "b");
        v.require(a == 0 && b == 0, fmt("cmd_run exit codes %d, %d", a, b));
        for (const char* f : {"curves.csv", "results.json"}) {
            const std::string x = slurp(dir / "a" / f), y = slurp(dir / "b" / f);
            v.require(!x.empty() && x == y, std::string(f) + " differs");
            v.note(fmt("%s: %zu bytes, identical: %s", f, x.size(), x == y ? "yes" : "no"));
        }
        return v;
    });

    guarded(10, "compute and storage budgets are enforced", [&] {
        Verdict v;
        const StreamRuns& runs = need_ce();
        std::size_t max_seen = 0, tasks = 0;
        for (std::size_t s = 0; s < runs.outputs.size(); ++s) {
            const std::size_t u = runs.configs[s].train.iterations_per_task;
            const std::size_t cap = runs.configs[s].train.buffer_capacity;
            for (const auto& run : runs.outputs[s].runs) {
                for (std::size_t t = 1; t < run.tasks.size(); ++t) {
                    ++tasks;
                    v.require(run.tasks[t].optimizer_steps == u,
                              fmt("seed %zu %s task %d: %zu steps", s, std::string(to_string(run.init)).c_str(),
                                  run.tasks[t].task_id, run.tasks[t].optimizer_steps));
                    v.require(run.tasks[t].max_buffer_size <= cap, "buffer exceeded capacity");
                }
                for (const auto& r : run.log.records) {
                    max_seen = std::max(max_seen, r.buffer_size);
                    v.require(r.buffer_size <= cap, fmt("buffer %zu at task %d iteration %zu", r.buffer_size,
                                                        r.task_id, r.iteration));
                }
            }
        }
        v.note(fmt("%zu task runs with exactly U steps checked; largest buffer at a checkpoint %zu", tasks, max_seen));
        return v;
    });

    std::printf("%d of 10 criteria failed (%.1f s)\n", failures, seconds_since(t_all));
    return failures == 0 ? 0 : 1;
}
