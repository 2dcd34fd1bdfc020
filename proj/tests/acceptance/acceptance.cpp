// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "asca/asca.hpp"
#include "automaton_invariants.hpp"
#include "oracles.hpp"

using namespace asca;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

// ---- 1: Lasso vs coordinate descent ----
Outcome lasso_oracle() {
    Outcome o;
    std::mt19937_64 rng(101);
    SolveOpts opts;
    opts.lambda = 0.1;
    opts.rel_tol = 1e-12;
    opts.max_iters = 20000;
    double worst = 0.0;
    const auto t0 = Clock::now();
    for (int i = 0; i < 100; ++i) {
        const Mat b = oracle::random_mat(5, 8, rng);
        const Vec y = oracle::random_vec(5, rng);
        const Code c = fista_solve(b, y, Vec(8, 0.0), opts);
        const double ours = oracle::naive_energy(b, y, c.coeffs, opts.lambda);
        const double ref = oracle::naive_energy(b, y, oracle::cd_lasso(b, y, opts.lambda), opts.lambda);
        worst = std::max(worst, std::fabs(ours - ref));
    }
    const double secs = seconds_since(t0);
    if (worst > 1e-6) o.fail("objective gap " + std::to_string(worst));
    if (secs >= 5.0) o.fail("runtime " + std::to_string(secs) + " s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "max objective gap %.3g, %.3f s", worst, secs);
    if (o.pass) o.detail = buf;
    return o;
}

// ---- 2: prox vs grid search, soft-threshold properties ----
Outcome prox_oracle() {
    Outcome o;
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> val(-5.0, 5.0), weight(0.0, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double v = val(rng), z = val(rng), lam = weight(rng), gam = weight(rng);
        const double x = prox_two_l1(v, z, lam, gam);
        const double gx = oracle::grid_prox(v, z, lam, gam);
        const double gap = oracle::two_l1_objective(x, v, z, lam, gam) - oracle::two_l1_objective(gx, v, z, lam, gam);
        worst = std::max(worst, gap);
    }
    if (worst > 1e-6) o.fail("prox objective gap " + std::to_string(worst));
    std::uniform_real_distribution<double> tau_d(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = val(rng), b = val(rng), tau = tau_d(rng);
        if (soft_threshold(-a, tau) != -soft_threshold(a, tau)) o.fail("soft_threshold not odd");
        if (std::fabs(soft_threshold(a, tau) - soft_threshold(b, tau)) > std::fabs(a - b) + 1e-15)
            o.fail("soft_threshold expansive");
        if (std::fabs(a) <= tau && soft_threshold(a, tau) != 0.0) o.fail("soft_threshold kill zone");
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max prox gap vs grid %.3g; 1000 soft-threshold draws", worst);
    if (o.pass) o.detail = buf;
    return o;
}

// ---- 3: ODL feasibility and descent ----
Outcome odl_descent() {
    Outcome o;
    std::mt19937_64 rng(303);
    for (int s = 0; s < 50; ++s) {
        Dictionary d = init_dictionary(12, 7, rng());
        for (int k = 0; k < 15; ++k) accumulate(d, oracle::random_vec(7, rng), oracle::random_vec(12, rng));
        double prev = oracle::surrogate(d.basis, d.gram_acc, d.cross_acc);
        for (int pass = 0; pass < 4; ++pass) {
            odl_update(d, 1);
            for (std::size_t j = 0; j < d.atoms(); ++j)
                if (norm2(d.basis.col(j)) > 1.0 + 1e-9) o.fail("column norm above 1");
            const double cur = oracle::surrogate(d.basis, d.gram_acc, d.cross_acc);
            if (cur > prev + 1e-12 * std::max(1.0, std::fabs(prev))) o.fail("surrogate increased");
            prev = cur;
        }
    }
    if (o.pass) o.detail = "50 states x 4 updates";
    return o;
}

// ---- 4: zero-padding invariance ----
Mat first_columns(const Mat& b, std::size_t n) {
    Mat out(b.rows(), n);
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t j = 0; j < n; ++j) out(r, j) = b(r, j);
    return out;
}

Outcome zero_padding(const std::vector<Vec>& stream) {
    Outcome o;
    std::mt19937_64 rng(404);
    Dictionary d = init_dictionary(400, 50, 4);
    std::vector<Vec> xs, ys;
    double before = 0.0;
    for (int s = 0; s < 100; ++s) {
        xs.push_back(oracle::random_vec(50, rng));
        ys.push_back(oracle::random_vec(400, rng));
        before += residual_sq(ys.back(), d.basis, xs.back());
    }
    grow(d, 15, 9);
    double after = 0.0;
    for (int s = 0; s < 100; ++s) after += residual_sq(ys[s], d.basis, zero_pad(xs[s], d.atoms()));
    if (after != before) o.fail("stored residual sum changed under grow");

    // End to end: every growth event leaves the frozen series and the
    // residuals of all stored codes untouched.
    SessionConfig cfg;
    cfg.threshold = 0.3;
    cfg.unit_normalize = true;
    Session session(cfg, 400);
    std::vector<Vec> codes, inputs;
    std::size_t events = 0;
    for (const auto& y : stream) {
        const auto series_before = session.ledger().series;
        const auto rec = session.process_sample(y);
        codes.push_back(session.last_code());
        inputs.push_back(session.prepare(y));
        if (!rec.action_taken) continue;
        ++events;
        const auto& series = session.ledger().series;
        for (std::size_t i = 0; i < series_before.size(); ++i)
            if (std::bit_cast<std::uint64_t>(series[i].sq_error) != std::bit_cast<std::uint64_t>(series_before[i].sq_error))
                o.fail("sq_error changed at growth");
        const Mat& grown = session.dictionary().basis;
        const Mat old = first_columns(grown, rec.dim);
        for (std::size_t i = 0; i < codes.size(); ++i) {
            if (codes[i].size() > rec.dim) continue;
            const Vec x_old = zero_pad(codes[i], rec.dim);
            if (residual_sq(inputs[i], old, x_old) != residual_sq(inputs[i], grown, zero_pad(x_old, grown.cols())))
                o.fail("padded residual differs after growth");
        }
    }
    if (events == 0) o.fail("end-to-end run had no growth event");
    if (o.pass) o.detail = "100 stored samples bit-identical; " + std::to_string(events) + " growth events end to end";
    return o;
}

// ---- 5: automaton trace and fuzz ----
Outcome automaton_checks() {
    Outcome o;
    auto a = init_automaton({5, 15, 20, 30, 35}, 0.5, 0.5);
    penalize(a, 0, 1.6);
    if (a.states[0].ub != 1.6 || a.states[1].lb != 1.6 || a.states[0].memory != 0.5)
        o.fail("hand trace mismatch");
    std::mt19937_64 rng(505);
    for (int seq = 0; seq < 10000; ++seq) {
        const double threshold = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        const double sigma = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
        auto aut = init_automaton({5, 15, 20, 30, 35}, threshold, sigma);
        asca_test::InvariantChecker checker(aut);
        std::uniform_real_distribution<double> err(0.0, 4.0 * threshold);
        for (int k = 0; k < 40; ++k) {
            step(aut, err(rng));
            if (!checker.check(aut)) {
                o.fail("sequence " + std::to_string(seq) + ": " + checker.failure);
                return o;
            }
        }
    }
    if (o.pass) o.detail = "trace exact; 10000 random sequences";
    return o;
}

// ---- 6/7: closed loop and baselines ----
SessionConfig sca_config() {
    SessionConfig c;
    c.actions = {5, 15, 20, 30, 35};
    c.threshold = 0.3;
    c.initial_dim = 50;
    c.sigma = 0.5;
    c.controller_period = 4;
    c.unit_normalize = true;
    c.seed = 1;
    return c;
}

double final_quartile_slope(const std::vector<SampleRecord>& s) {
    const std::size_t start = 3 * s.size() / 4;
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = start; i < s.size(); ++i) {
        const double x = double(s[i].k), y = s[i].tmse;
        n += 1; sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome closed_loop(const Session& s, double secs) {
    Outcome o;
    const auto& series = s.ledger().series;
    const double final_tmse = tmse(s.ledger());
    if (final_tmse > 0.3 * 1.25) o.fail("final T-MSE " + std::to_string(final_tmse) + " > 0.375");
    for (std::size_t i = 1; i < series.size(); ++i)
        if (series[i].dim < series[i - 1].dim) o.fail("dimension decreased");
    if (s.growths().empty()) o.fail("no growth event");
    const double slope = final_quartile_slope(series);
    if (slope > 0.0) o.fail("final-quartile slope " + std::to_string(slope) + " > 0");
    if (secs >= 120.0) o.fail("runtime " + std::to_string(secs) + " s");
    char buf[200];
    std::snprintf(buf, sizeof buf, "final T-MSE %.4f, dim 50 -> %zu over %zu growths, slope %.3g, %.1f s",
                  final_tmse, s.dim(), s.growths().size(), slope, secs);
    if (o.pass) o.detail = buf;
    return o;
}

Outcome baselines(const Session& sca, const std::vector<Vec>& stream) {
    Outcome o;
    auto fixed = [&](std::size_t dim) {
        SessionConfig c = sca_config();
        c.controller = false;
        c.initial_dim = dim;
        Session s(c, 400);
        s.run_stream(stream);
        return s;
    };
    const double t_sca = tmse(sca.ledger());
    const Session b50 = fixed(50);
    const Session b500 = fixed(500);
    const double t50 = tmse(b50.ledger()), t500 = tmse(b500.ledger());
    if (!(t50 > t_sca)) o.fail("dim-50 baseline T-MSE " + std::to_string(t50) + " not above SCA");
    if (!(t500 < t50)) o.fail("dim-500 baseline T-MSE " + std::to_string(t500) + " not below dim-50 baseline");
    if (500 < 5 * sca.dim()) o.fail("dim-500 baseline has fewer than 5x SCA's final atoms");
    char buf[200];
    std::snprintf(buf, sizeof buf, "T-MSE dim50 %.4f > SCA %.4f; dim500 %.4f with %.1fx atoms", t50, t_sca,
                  t500, 500.0 / double(sca.dim()));
    if (o.pass) o.detail = buf;
    return o;
}

// ---- 8: determinism and persistence ----
Outcome determinism(const std::vector<Vec>& stream) {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "asca_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    save_patch_cache(root / "stream.ptch", stream);
    auto entries = ConfigEntries{{"dataset", (root / "stream.ptch").string()},
                                 {"threshold", "0.3"},
                                 {"seed", "5"},
                                 {"out_dir", (root / "a").string()}};
    const RunSpec first = parse_config(entries);
    run_to_directory(first, load_dataset(first));
    // Second run from the written manifest, redirected to another directory.
    const RunSpec second = parse_config(parse_config_text(detail::read_file(root / "a" / "manifest.txt")),
                                        {{"out_dir", (root / "b").string()}});
    run_to_directory(second, load_dataset(second));
    if (detail::read_file(root / "a" / "series.csv") != detail::read_file(root / "b" / "series.csv"))
        o.fail("series.csv differs between reruns");

    // Resume: 200 samples, checkpoint to disk, reload, 200 more.
    const std::span<const Vec> all(stream);
    Session part(first.effective_session(), 400);
    part.run_stream(all.first(200));
    checkpoint_save(part, root / "half.asca");
    Session resumed = checkpoint_load(root / "half.asca");
    resumed.run_stream(all.subspan(200));
    const Session whole = checkpoint_load(root / "a" / "checkpoint.asca");
    if (!(resumed == whole)) o.fail("resumed session differs from uninterrupted run");
    if (series_csv(resumed.ledger()) != detail::read_file(root / "a" / "series.csv"))
        o.fail("resumed series.csv differs");
    fs::remove_all(root);
    if (o.pass) o.detail = "series.csv byte-identical; 200+200 resume equals 400";
    return o;
}

}  // namespace

int main() {
    // 400 synthetic Gaussian-mixture patches (100 clusters, noise 0.3).
    const std::vector<Vec> stream = synthetic_mixture_patches({.count = 400, .clusters = 100, .noise = 0.3, .seed = 7});

    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };

    report(1, "lasso vs coordinate descent", lasso_oracle);
    report(2, "prox vs grid search", prox_oracle);
    report(3, "dictionary update feasibility and descent", odl_descent);
    report(4, "zero-padding invariance", [&] { return zero_padding(stream); });
    report(5, "automaton trace and invariants", automaton_checks);

    std::optional<Session> sca;
    report(6, "closed-loop control", [&] {
        const auto t0 = Clock::now();
        Session s(sca_config(), 400);
        s.run_stream(stream);
        const double secs = seconds_since(t0);
        sca = s;
        return closed_loop(s, secs);
    });
    report(7, "baseline separation", [&] {
        if (!sca) {
            Outcome o;
            o.fail("SCA run unavailable");
            return o;
        }
        return baselines(*sca, stream);
    });
    report(8, "determinism and persistence", [&] { return determinism(stream); });
    return failures == 0 ? 0 : 1;
}
