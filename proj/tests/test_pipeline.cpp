#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "asca/checkpoint.hpp"
#include "asca/pipeline.hpp"
#include "oracles.hpp"

using asca::Session;
using asca::SessionConfig;
using asca::Vec;

namespace {

// λ large enough that every code is zero, so each sample contributes
// ‖y‖² = 1 and T-MSE stays at exactly 1.
SessionConfig zero_code_config() {
    SessionConfig c;
    c.solve_opts.lambda = 5.0;
    c.initial_dim = 50;
    c.threshold = 0.5;
    c.sigma = 0.5;
    c.controller_period = 4;
    return c;
}

std::vector<Vec> unit_stream(std::size_t count, std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec> out;
    for (std::size_t i = 0; i < count; ++i) {
        Vec v = oracle::random_vec(m, rng);
        const double n = asca::norm2(v);
        for (double& e : v) e /= n;
        out.push_back(v);
    }
    return out;
}

SessionConfig small_config() {
    SessionConfig c;
    c.initial_dim = 6;
    c.actions = {2, 4};
    c.threshold = 0.05;
    c.controller_period = 3;
    c.solve_opts.lambda = 0.05;
    c.solve_opts.max_iters = 200;
    c.seed = 11;
    return c;
}

}  // namespace

TEST(Ledger, TmseRequiresSamples) {
    EXPECT_THROW(asca::tmse(asca::SessionLedger{}), std::domain_error);
    asca::SessionLedger l;
    l.err_sum = 3.0;
    l.k = 4;
    EXPECT_EQ(asca::tmse(l), 0.75);
}

TEST(Session, ZeroCodesGrowAtFirstControllerCheck) {
    Session s(zero_code_config(), 16);
    const auto stream = unit_stream(8, 16, 1);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto rec = s.process_sample(stream[i]);
        EXPECT_NEAR(rec.sq_error, 1.0, 1e-12);
        EXPECT_NEAR(rec.tmse, 1.0, 1e-12);
        if (i == 3) {
            ASSERT_TRUE(rec.action_taken.has_value());
            EXPECT_EQ(*rec.action_taken, 5u);
            EXPECT_EQ(*rec.state_visited, 0u);
            EXPECT_EQ(rec.dim, 50u);
            EXPECT_EQ(s.dim(), 55u);
        } else if (i < 3) {
            EXPECT_FALSE(rec.action_taken.has_value());
            EXPECT_EQ(s.dim(), 50u);
        }
    }
    ASSERT_GE(s.growths().size(), 1u);
    EXPECT_EQ(s.growths()[0].old_dim, 50u);
    EXPECT_EQ(s.growths()[0].at_sample, 4u);
}

TEST(Session, ControllerOnlyRunsOnPeriod) {
    Session s(zero_code_config(), 16);
    for (const auto& y : unit_stream(12, 16, 2)) {
        const auto rec = s.process_sample(y);
        if (rec.k % 4 != 0) EXPECT_FALSE(rec.state_visited.has_value()) << "k=" << rec.k;
    }
}

TEST(Session, BaselineNeverGrows) {
    auto c = zero_code_config();
    c.controller = false;
    Session s(c, 16);
    s.run_stream(unit_stream(12, 16, 3));
    EXPECT_EQ(s.dim(), 50u);
    EXPECT_FALSE(s.automaton().has_value());
    EXPECT_TRUE(s.growths().empty());
}

TEST(Session, ExactlyRepresentableStreamHasZeroError) {
    SessionConfig c;
    c.initial_dim = 4;
    c.controller = false;
    c.solve_opts.lambda = 1e-9;
    c.solve_opts.rel_tol = 1e-14;
    c.solve_opts.max_iters = 5000;
    Session s(c, 4);
    // With ≥ as many atoms as the ambient dimension and a tiny λ the code
    // reproduces the input almost exactly.
    for (const auto& y : unit_stream(6, 4, 4)) {
        const auto rec = s.process_sample(y);
        EXPECT_LT(rec.sq_error, 1e-6);
    }
}

TEST(Session, LedgerMatchesSeriesSum) {
    Session s(small_config(), 9);
    s.run_stream(unit_stream(30, 9, 5));
    double sum = 0.0;
    for (const auto& r : s.ledger().series) sum += r.sq_error;
    EXPECT_NEAR(s.ledger().err_sum, sum, 1e-12);
    EXPECT_EQ(s.ledger().k, 30u);
    EXPECT_EQ(s.dictionary().samples_seen, 30u);
}

TEST(Session, WrongInputLengthNamesSample) {
    Session s(small_config(), 9);
    s.process_sample(unit_stream(1, 9, 6)[0]);
    try {
        s.process_sample(Vec(5, 0.1));
        FAIL() << "expected SampleError";
    } catch (const asca::SampleError& e) {
        EXPECT_EQ(e.sample, 2u);
    }
}

TEST(Session, NonFiniteInputRaisesSampleError) {
    Session s(small_config(), 9);
    Vec bad(9, 0.1);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(s.process_sample(bad), asca::SampleError);
}

TEST(Session, Deterministic) {
    const auto stream = unit_stream(40, 9, 7);
    Session a(small_config(), 9), b(small_config(), 9);
    a.run_stream(stream);
    b.run_stream(stream);
    EXPECT_EQ(a, b);
}

TEST(Session, DynamicModeRuns) {
    auto c = small_config();
    c.dynamic_mode = true;
    c.solve_opts.gamma = 0.05;
    Session s(c, 9);
    s.run_stream(unit_stream(20, 9, 8));
    EXPECT_EQ(s.ledger().k, 20u);
    EXPECT_TRUE(std::isfinite(asca::tmse(s.ledger())));
}

TEST(Session, InvalidConfigRejected) {
    auto c = small_config();
    c.actions = {4, 2};
    EXPECT_THROW(Session(c, 9), asca::AutomatonError);
    c = small_config();
    c.controller_period = 0;
    EXPECT_THROW(Session(c, 9), std::invalid_argument);
}

TEST(Checkpoint, RoundTripRestoresEverything) {
    Session s(small_config(), 9);
    s.run_stream(unit_stream(25, 9, 9));
    ASSERT_FALSE(s.growths().empty());
    const Session back = asca::decode_checkpoint(asca::encode_checkpoint(s));
    EXPECT_EQ(back, s);
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
    const auto stream = unit_stream(60, 9, 10);
    Session full(small_config(), 9);
    full.run_stream(stream);

    Session first(small_config(), 9);
    first.run_stream(std::span(stream).first(30));
    Session resumed = asca::decode_checkpoint(asca::encode_checkpoint(first));
    resumed.run_stream(std::span(stream).subspan(30));
    EXPECT_EQ(resumed, full);
}

TEST(Checkpoint, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "asca_test_checkpoint.asca";
    Session s(small_config(), 9);
    s.run_stream(unit_stream(10, 9, 11));
    asca::checkpoint_save(s, path);
    EXPECT_EQ(asca::checkpoint_load(path), s);
    std::filesystem::remove(path);
}

namespace {

asca::CheckpointErrc decode_code(const std::string& buf) {
    try {
        (void)asca::decode_checkpoint(buf);
    } catch (const asca::CheckpointError& e) {
        return e.code;
    }
    ADD_FAILURE() << "decode unexpectedly succeeded";
    return asca::CheckpointErrc::io;
}

std::string sample_checkpoint() {
    Session s(small_config(), 9);
    s.run_stream(unit_stream(8, 9, 12));
    return asca::encode_checkpoint(s);
}

}  // namespace

TEST(Checkpoint, CorruptedMagic) {
    std::string buf = sample_checkpoint();
    buf[0] = 'X';
    EXPECT_EQ(decode_code(buf), asca::CheckpointErrc::bad_magic);
}

TEST(Checkpoint, VersionMismatch) {
    std::string buf = sample_checkpoint();
    buf[4] = 2;
    EXPECT_EQ(decode_code(buf), asca::CheckpointErrc::version_mismatch);
}

TEST(Checkpoint, Truncated) {
    const std::string buf = sample_checkpoint();
    for (std::size_t keep : {std::size_t{5}, std::size_t{10}, buf.size() / 2, buf.size() - 1})
        EXPECT_EQ(decode_code(buf.substr(0, keep)), asca::CheckpointErrc::truncated) << keep;
}

TEST(Checkpoint, FlippedPayloadByteFailsChecksum) {
    std::string buf = sample_checkpoint();
    buf[asca::kHeaderBytes + 20] ^= 0x40;
    EXPECT_EQ(decode_code(buf), asca::CheckpointErrc::checksum);
}

TEST(Checkpoint, MissingFileIsIoError) {
    try {
        (void)asca::checkpoint_load("/nonexistent/dir/none.asca");
        FAIL();
    } catch (const asca::CheckpointError& e) {
        EXPECT_EQ(e.code, asca::CheckpointErrc::io);
    }
}
