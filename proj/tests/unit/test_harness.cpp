#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "memud/harness.hpp"

using namespace memud;

namespace {

// Small, fast configuration shared by the harness tests.
ExperimentConfig small_config(ExperimentKind kind) {
    auto cfg = default_config(kind);
    cfg.users = 3;
    cfg.frames = 6;
    cfg.frame_length = 12;
    cfg.snr_db = {4, 10};
    cfg.ma_size.population = 12;
    cfg.ma_size.generations = 6;
    cfg.std_size.population = 12;
    cfg.std_size.generations = 6;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("CSV formatting") {
    CHECK(format_csv({}) == "x,detector,metric,trials,ci,low_confidence\n");
    Table t;
    CurvePoint p;
    p.x = 10;
    p.detector = "ma";
    p.metric = 0.0125;
    p.trials = 800;
    p.ci = 0.001;
    p.low_confidence = false;
    t.push_back(p);
    CHECK(format_csv(t) == "x,detector,metric,trials,ci,low_confidence\n10,ma,0.0125,800,0.001,0\n");

    const auto path = std::filesystem::temp_directory_path() / "memud_empty.csv";
    emit_csv({}, path);
    CHECK(slurp(path) == "x,detector,metric,trials,ci,low_confidence\n");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(emit_csv(t, "/nonexistent-dir/out.csv"), IoError);
}

TEST_CASE("BER sweep shape and determinism across worker counts") {
    auto cfg = small_config(ExperimentKind::ber_vs_snr);
    cfg.detectors = {"ma", "std-ga", "mmse", "decorrelator", "mf", "ml-oracle"};
    const auto a = run_experiment(cfg);
    CHECK(a.table.size() == cfg.snr_db.size() * cfg.detectors.size());
    for (const auto& p : a.table) {
        CHECK(p.trials == cfg.frames * cfg.frame_length);
        CHECK(p.metric >= 0.0);
        CHECK(p.metric <= 1.0);
    }
    cfg.workers = 3;
    const auto b = run_experiment(cfg);
    CHECK(format_csv(a.table) == format_csv(b.table));
    cfg.seed = 2;
    const auto c = run_experiment(cfg);
    CHECK(format_csv(a.table) != format_csv(c.table));
}

TEST_CASE("capacity and near-far sweeps") {
    auto cap = small_config(ExperimentKind::capacity);
    cap.users_grid = {1, 3};
    cap.detectors = {"mf", "decorrelator"};
    const auto rc = run_experiment(cap);
    REQUIRE(rc.table.size() == 4);
    CHECK(rc.table[0].x == 1.0);
    CHECK(rc.table[3].x == 3.0);

    auto nf = small_config(ExperimentKind::near_far);
    nf.near_far_grid_db = {0, 10};
    nf.detectors = {"decorrelator"};
    const auto rn = run_experiment(nf);
    REQUIRE(rn.table.size() == 4);
    CHECK(rn.table[0].detector == "decorrelator/nf=0");
    CHECK(rn.table[3].detector == "decorrelator/nf=10");
    // Common random numbers: the decorrelator ignores interferer energy.
    CHECK(rn.table[0].metric == rn.table[2].metric);
    CHECK(rn.table[1].metric == rn.table[3].metric);
}

TEST_CASE("noiseless point gives zero BER for the decorrelator and MA") {
    auto cfg = small_config(ExperimentKind::ber_vs_snr);
    cfg.noiseless = true;
    cfg.snr_db = {10};
    cfg.detectors = {"ma", "decorrelator"};
    const auto r = run_experiment(cfg);
    for (const auto& p : r.table) {
        CHECK(p.metric == 0.0);
    }
}

TEST_CASE("channel MSE with genie start on a static noiseless channel is quantization limited") {
    auto cfg = small_config(ExperimentKind::channel_mse);
    cfg.noiseless = true;
    cfg.static_channel = true;
    cfg.ma.genie_init = true;
    cfg.frames = 50;
    cfg.frame_length = 2;
    const auto r = run_experiment(cfg);
    REQUIRE(r.table.size() == cfg.frame_length + 1);
    CHECK(r.table[0].x == 0.0);
    // Oracle: mean rounding error of the true initial fading, saturation included.
    const auto codes = experiment_codes(cfg, cfg.users);
    const std::vector<double> e(cfg.users, 1.0);
    double sum = 0.0;
    double in_range = 0.0;
    std::size_t count = 0;
    for (std::size_t f = 0; f < cfg.frames; ++f) {
        const auto frame = make_frame(codes, e, 0.0, cfg, f);
        for (std::size_t i = 0; i < cfg.users; ++i) {
            const cplx b = frame.b_true(0, static_cast<Eigen::Index>(i));
            const cplx q{Quantizer::decode(Quantizer::encode(b.real())),
                         Quantizer::decode(Quantizer::encode(b.imag()))};
            sum += std::norm(q - b);
            if (std::abs(b.real()) <= Quantizer::max_value &&
                std::abs(b.imag()) <= Quantizer::max_value) {
                in_range = std::max(in_range, std::norm(q - b));
            }
            ++count;
        }
    }
    CHECK(r.table[0].metric == doctest::Approx(sum / double(count)));
    // Inside the range the rounding error is at most half a step per component.
    CHECK(in_range <= 2.0 * std::pow(0.5 * Quantizer::step, 2));

    cfg.ma.genie_init = false;
    const auto cold = run_experiment(cfg);
    // Prior mean 0 against unit-power Rayleigh fading.
    CHECK(cold.table[0].metric == doctest::Approx(1.0).epsilon(0.3));

    auto bad = cfg;
    bad.detectors = {"ma", "mmse"};
    CHECK_THROWS_AS(run_experiment(bad), ConfigError);
}

TEST_CASE("trace is recorded on request") {
    auto cfg = small_config(ExperimentKind::ber_vs_snr);
    cfg.detectors = {"mf", "ma"};
    cfg.trace = true;
    const auto r = run_experiment(cfg);
    CHECK_FALSE(r.trace.empty());
    CHECK(r.trace.front().generation == 0);
}

TEST_CASE("scoring of blind outputs") {
    FrameObservation f;
    f.z = ComplexMatrix::Zero(4, 1);
    f.x_true.resize(4, 1);
    f.x_true << 1, -1, -1, 1;
    f.b_true = ComplexMatrix::Constant(4, 1, cplx(0.5, 0.5));
    DetectorOutput out;
    out.x_hat = -f.x_true;
    out.b_hat = -f.b_true;
    const auto aligned = score_user(f, out, 0, Scoring::aligned);
    CHECK(aligned.errors == 0);
    CHECK(aligned.bits == 4);
    const auto diff = score_user(f, out, 0, Scoring::differential);
    CHECK(diff.errors == 0);
    CHECK(diff.bits == 3);
    out.x_hat(2, 0) = Symbol(-out.x_hat(2, 0));
    CHECK(score_user(f, out, 0, Scoring::aligned).errors == 1);
    CHECK(score_user(f, out, 0, Scoring::differential).errors == 2);

    DetectorOutput genie;
    genie.x_hat = -f.x_true;
    CHECK(score_user(f, genie, 0, Scoring::aligned).errors == 4);
}

TEST_CASE("frames and detector streams depend only on their indices") {
    const auto cfg = small_config(ExperimentKind::ber_vs_snr);
    const auto codes = experiment_codes(cfg, 3);
    const std::vector<double> e1{1, 1, 1};
    const std::vector<double> e2{1, 4, 4};
    const auto a = make_frame(codes, e1, 0.1, cfg, 5);
    const auto b = make_frame(codes, e2, 0.01, cfg, 5);
    const auto c = make_frame(codes, e1, 0.1, cfg, 6);
    CHECK(a.x_true == b.x_true);
    CHECK(a.b_true == b.b_true);
    CHECK(a.x_true != c.x_true);
    CHECK(detector_seed(1, 5, "ma") == detector_seed(1, 5, "ma"));
    CHECK(detector_seed(1, 5, "ma") != detector_seed(1, 5, "std-ga"));
    CHECK(detector_seed(1, 5, "ma") != detector_seed(1, 6, "ma"));
}

TEST_CASE("parallel_for covers every index once and forwards exceptions") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) {
        CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) {
                                         throw NumericalError("boom");
                                     }
                                 }),
                    NumericalError);
}
