#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flowscale/experiment.hpp"
#include "flowscale/gridio.hpp"
#include "flowscale/rng.hpp"

using namespace flowscale;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const char* tag) : path(fs::temp_directory_path() / (std::string("flowscale_") + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ExperimentSpec tiny_spec(const std::string& out_dir) {
    ExperimentSpec s = ExperimentSpec::preset("guidance");
    s.name = "tiny";
    s.seeds = {0, 1, 2};
    s.output_dir = out_dir;
    return s;
}

}  // namespace

TEST_CASE("grid files round-trip at float32 precision") {
    TempDir dir("grid");
    Grid g = gaussian_grid(3, 5, 7, 123);
    write_grid(g, dir.str("a.grid"));
    Grid r = read_grid(dir.str("a.grid"));
    CHECK(r.channels == 3);
    CHECK(r.height == 5);
    CHECK(r.width == 7);
    for (size_t i = 0; i < g.data.size(); ++i) {
        CHECK(r.data[i] == static_cast<double>(static_cast<float>(g.data[i])));
    }
    CHECK_THROWS_AS(read_grid(dir.str("missing.grid")), std::runtime_error);
    std::ofstream bad(dir.str("bad.grid"), std::ios::binary);
    bad << "not a grid file";
    bad.close();
    CHECK_THROWS_AS(read_grid(dir.str("bad.grid")), std::runtime_error);
}

TEST_CASE("png round-trip stays within one quantization step") {
    TempDir dir("png");
    Grid g = gaussian_grid(1, 8, 8, 9);
    write_png(g, dir.str("a.png"), -3.0, 3.0);
    Grid r = read_png(dir.str("a.png"), -3.0, 3.0);
    const double step = 6.0 / 255.0;
    for (size_t i = 0; i < g.data.size(); ++i) {
        const double clipped = std::min(3.0, std::max(-3.0, g.data[i]));
        CHECK(std::abs(r.data[i] - clipped) <= 0.5 * step + 1e-12);
    }
    // out-of-window values clip instead of wrapping
    Grid hot(1, 2, 2);
    hot.data = {10.0, -10.0, 0.0, 3.0};
    write_png(hot, dir.str("hot.png"), -1.0, 1.0);
    Grid hr = read_png(dir.str("hot.png"), -1.0, 1.0);
    CHECK(hr.data[0] == doctest::Approx(1.0));
    CHECK(hr.data[1] == doctest::Approx(-1.0));
    // three channels work, two do not
    Grid rgb = gaussian_grid(3, 4, 4, 2);
    write_png(rgb, dir.str("rgb.png"));
    CHECK(read_png(dir.str("rgb.png")).channels == 3);
    CHECK_THROWS_AS(write_png(gaussian_grid(2, 4, 4, 3), dir.str("x.png")),
                    std::invalid_argument);
    CHECK_THROWS_AS(write_png(g, dir.str("y.png"), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("spec hash is FNV-1a 64") {
    CHECK(spec_hash("") == 0xcbf29ce484222325ULL);
    CHECK(spec_hash("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(spec_hash("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("csv writer emits provenance and is byte-deterministic") {
    TempDir dir("csv");
    auto emit = [&](const std::string& path) {
        CsvWriter csv(path, "a,b,c", spec_hash("spec"));
        csv.row({"1", CsvWriter::num(0.5), CsvWriter::num(static_cast<long long>(-7))});
        csv.raw_line("x,y,z");
    };
    emit(dir.str("one.csv"));
    emit(dir.str("two.csv"));
    const std::string one = slurp(dir.str("one.csv"));
    CHECK(one == slurp(dir.str("two.csv")));
    std::istringstream lines(one);
    std::string line;
    std::getline(lines, line);
    CHECK(line.rfind("# flowscale 0.1.0 spec_hash=", 0) == 0);
    std::getline(lines, line);
    CHECK(line == "a,b,c");
    std::getline(lines, line);
    CHECK(line == "1,0.5,-7");
    std::getline(lines, line);
    CHECK(line == "x,y,z");
    CHECK(CsvWriter::num(0.1) == "0.1");  // shortest round-trip form
    CHECK(CsvWriter::num(2.0) == "2");
}

TEST_CASE("experiment spec json round-trips and validates") {
    ExperimentSpec s = ExperimentSpec::preset("guidance");
    CHECK(s.seeds.size() == 64);
    CHECK(s.factor() == 2);
    s.validate();
    ExperimentSpec r = ExperimentSpec::from_json(s.to_json());
    CHECK(r.to_json() == s.to_json());
    CHECK(r.mixture.weights == s.mixture.weights);
    CHECK(r.guidance.mode == s.guidance.mode);
    CHECK(r.degradation.posterior_temperature == s.degradation.posterior_temperature);
    CHECK(r.toolkit.rope.scale.extra_len == 16 * 16);

    ExperimentSpec lc = ExperimentSpec::preset("loss_curve");
    lc.validate();
    CHECK(lc.extra_res == 16);
    ExperimentSpec au = ExperimentSpec::preset("audit");
    au.validate();
    CHECK_THROWS_AS(ExperimentSpec::preset("nope"), std::invalid_argument);

    ExperimentSpec bad = s;
    bad.extra_res = 12;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.seeds = {1, 1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    // a sparse document on top of a preset
    ExperimentSpec sparse =
        ExperimentSpec::from_json(R"({"preset":"guidance","name":"x","seeds":[5]})");
    CHECK(sparse.name == "x");
    CHECK(sparse.seeds == std::vector<std::uint64_t>{5});
    CHECK(sparse.mixture.data_spread == s.mixture.data_spread);
}

TEST_CASE("run_one is deterministic and mode-sensitive") {
    ExperimentSpec s = tiny_spec("unused");
    SampleMetrics a = run_one(s, GuidanceMode::projected_flow, 3);
    SampleMetrics b = run_one(s, GuidanceMode::projected_flow, 3);
    CHECK(a.projection_error == b.projection_error);
    CHECK(a.high_band_energy == b.high_band_energy);
    CHECK(a.guidance_magnitude == b.guidance_magnitude);
    CHECK(a.guidance_magnitude > 0.0);
    SampleMetrics c = run_one(s, GuidanceMode::none, 3);
    CHECK(c.guidance_magnitude == 0.0);
    CHECK(c.projection_error != a.projection_error);
    TwoStageResult r;
    run_one(s, GuidanceMode::projected_flow, 3, &r);
    CHECK(r.x1_extra.height == s.extra_res);
    CHECK(r.x1_native.height == s.native_res);
}

TEST_CASE("run_sample writes per-seed artifacts and a deterministic csv") {
    TempDir dir("sample");
    ExperimentSpec s = tiny_spec((dir.path / "one").string());
    run_sample(s);
    for (std::uint64_t seed : s.seeds) {
        const std::string stem = "tiny_seed" + std::to_string(seed);
        CHECK(fs::exists(dir.path / "one" / (stem + "_native.grid")));
        CHECK(fs::exists(dir.path / "one" / (stem + "_extra.grid")));
        CHECK(fs::exists(dir.path / "one" / (stem + "_native.png")));
        CHECK(fs::exists(dir.path / "one" / (stem + "_extra.png")));
    }
    Grid native = read_grid((dir.path / "one" / "tiny_seed0_native.grid").string());
    CHECK(native.height == s.native_res);

    ExperimentSpec s2 = tiny_spec((dir.path / "two").string());
    run_sample(s2);
    // the metrics files differ only through output_dir inside the provenance hash,
    // so compare everything after the first line
    auto body = [](const std::string& text) { return text.substr(text.find('\n') + 1); };
    CHECK(body(slurp((dir.path / "one" / "tiny_metrics.csv").string())) ==
          body(slurp((dir.path / "two" / "tiny_metrics.csv").string())));
}

TEST_CASE("run_guidance_comparison writes per-seed and median rows") {
    TempDir dir("cmp");
    ExperimentSpec s = tiny_spec(dir.path.string());
    const std::vector<GuidanceMode> modes = {GuidanceMode::projected_flow, GuidanceMode::none};
    run_guidance_comparison(s, modes);
    const std::string text = slurp((dir.path / "tiny_comparison.csv").string());
    std::istringstream lines(text);
    std::string line;
    int data_rows = 0, median_rows = 0;
    while (std::getline(lines, line)) {
        if (line.rfind("tiny,", 0) != 0) continue;
        ++data_rows;
        if (line.find(",median,") != std::string::npos) ++median_rows;
    }
    CHECK(data_rows == static_cast<int>(modes.size() * (s.seeds.size() + 1)));
    CHECK(median_rows == static_cast<int>(modes.size()));
    CHECK(text.find("projected_flow_projection_error") != std::string::npos);
    CHECK(text.find("none_projection_error") != std::string::npos);
    CHECK_THROWS_AS(run_guidance_comparison(s, {GuidanceMode::none}), std::invalid_argument);
}

TEST_CASE("run_loss_curve writes native and extrapolated rows") {
    TempDir dir("loss");
    ExperimentSpec s = ExperimentSpec::preset("loss_curve");
    s.name = "lc";
    s.output_dir = dir.path.string();
    const std::vector<double> times = {0.25, 0.5};
    run_loss_curve(s, times, 16);
    const std::string text = slurp((dir.path / "lc_loss_curve.csv").string());
    std::istringstream lines(text);
    std::string line;
    int native_rows = 0, extra_rows = 0;
    while (std::getline(lines, line)) {
        if (line.rfind("8,", 0) == 0) {
            ++native_rows;
            CHECK(line.substr(line.rfind(',') + 1) == "1");
        }
        if (line.rfind("16,", 0) == 0) ++extra_rows;
    }
    CHECK(native_rows == 2);
    CHECK(extra_rows == 2);
    CHECK_THROWS_AS(run_loss_curve(s, {0.0, 0.5}, 4), std::invalid_argument);
}

TEST_CASE("rope and entropy audits write their tables") {
    TempDir dir("audit");
    ExperimentSpec s = ExperimentSpec::preset("audit");
    s.name = "aud";
    s.native_res = 4;  // keep the attention cost tiny
    s.extra_res = 8;
    s.seeds = {0};
    s.toolkit.rope.scale = ScalePair{16, 64};
    s.output_dir = dir.path.string();
    run_rope_audit(s);
    const std::string rope = slurp((dir.path / "aud_rope_audit.csv").string());
    CHECK(rope.find("dim,max_native_angle,max_extra_angle_scaled,"
                    "max_extra_angle_unscaled,effective_base") != std::string::npos);
    std::istringstream lines(rope);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#' && line[0] != 'd') ++rows;
    CHECK(rows == s.toolkit.rope.head_dim / 4);

    run_entropy_audit(s);
    const std::string ent = slurp((dir.path / "aud_entropy_audit.csv").string());
    CHECK(ent.find("variant,seed,layer,head,entropy,mean_text_mass") != std::string::npos);
    for (const char* variant : {"native", "extra_unscaled", "extra_scaled", "extra_duplicated"})
        CHECK(ent.find(variant) != std::string::npos);
}

TEST_CASE("render converts a grid dump to an image") {
    TempDir dir("render");
    Grid g = gaussian_grid(1, 8, 8, 4);
    write_grid(g, dir.str("g.grid"));
    render(dir.str("g.grid"), dir.str("g.png"), -2.0, 2.0);
    Grid img = read_png(dir.str("g.png"), -2.0, 2.0);
    CHECK(img.height == 8);
    CHECK(img.width == 8);
    for (double v : img.data) {
        CHECK(v >= -2.0);
        CHECK(v <= 2.0);
    }
}
