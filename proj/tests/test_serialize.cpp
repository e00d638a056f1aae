#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <minforge/forge_smooth.hpp>
#include <minforge/serialize.hpp>

using namespace minforge;
using Catch::Matchers::WithinRel;

namespace {

template <typename Fn>
std::string error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const forge_error& e) {
        return e.code();
    }
    return "";
}

NetworkParams random_params(const Architecture& arch, std::uint64_t seed) {
    NetworkParams p = zero_params(arch);
    Rng rng = Rng::for_stage(seed, stream::trial);
    for_each_param(p, [&](double& v) { v = rng.normal(); });
    return p;
}

} // namespace

// ============================================================================
// Activation specs
// ============================================================================
TEST_CASE("spec_for resolves the branch the anchor sits on") {
    SECTION("elu is smooth left of zero and linear right of it") {
        ActivationSpec lo = spec_for(ActKind::elu, -1.0, 0.5);
        REQUIRE_FALSE(lo.piecewise());
        REQUIRE_FALSE(lo.slope.has_value());

        ActivationSpec hi = spec_for(ActKind::elu, 1.0, 0.5);
        REQUIRE(hi.piecewise());
        REQUIRE(*hi.slope == 1.0);
        REQUIRE(*hi.offset == 1.0); // value at the anchor, not the intercept
    }

    SECTION("selu scales its linear branch by lambda") {
        ActivationSpec hi = spec_for(ActKind::selu, 1.0, 0.5);
        REQUIRE(hi.piecewise());
        REQUIRE_THAT(*hi.slope, WithinRel(selu_lambda, 1e-15));
        REQUIRE_FALSE(spec_for(ActKind::selu, -1.0, 0.5).piecewise());
    }

    SECTION("relu's left branch is dead flat") {
        ActivationSpec s = spec_for(ActKind::relu, -1.0, 0.5);
        REQUIRE(s.piecewise());
        REQUIRE(*s.slope == 0.0);
        REQUIRE(*s.offset == 0.0);
    }

    SECTION("leaky relu keeps its shallow slope on the left") {
        ActivationSpec s = spec_for(ActKind::leaky_relu, -1.0, 0.5);
        REQUIRE(*s.slope == leaky_slope);
        REQUIRE(*s.offset == -leaky_slope); // sigma(-1)
    }

    SECTION("a segment straddling the kink is rejected") {
        REQUIRE(error_code_of([] { spec_for(ActKind::relu, 0.2, 0.5); }) ==
                "no-valid-anchor");
    }

    SECTION("smooth kinds pass straight through") {
        ActivationSpec s = spec_for(ActKind::sigmoid, 1.0, 0.5);
        REQUIRE(s.kind == ActKind::sigmoid);
        REQUIRE_FALSE(s.piecewise());
    }
}

TEST_CASE("activation specs survive the JSON trip with their branch intact") {
    for (ActivationSpec s : {relu_zero_spec(), elu_linear_spec(),
                             select_anchor(ActKind::sigmoid),
                             select_anchor(ActKind::swish)}) {
        ActivationSpec back = activation_from_json(to_json(s));
        REQUIRE(back.kind == s.kind);
        REQUIRE(back.anchor == s.anchor);
        REQUIRE(back.delta == s.delta);
        REQUIRE(back.piecewise() == s.piecewise());
        if (s.piecewise()) {
            REQUIRE(*back.slope == *s.slope);
            REQUIRE(*back.offset == *s.offset);
        }
    }
    json bad{{"kind", "sigmoid"}, {"anchor", 1.0}};
    REQUIRE(error_code_of([&] { activation_from_json(bad); }) == "config-invalid");
}

// ============================================================================
// Matrices and networks
// ============================================================================
TEST_CASE("row-major flattening keeps the element order") {
    MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    json arr = matrix_row_major(m);
    for (int i = 0; i < 6; ++i) REQUIRE(arr.at(static_cast<std::size_t>(i)).get<double>() == double(i + 1));
    REQUIRE(matrix_from_row_major(arr, 2, 3) == m);
    REQUIRE(error_code_of([&] { matrix_from_row_major(arr, 2, 2); }) ==
            "shape-mismatch");
}

TEST_CASE("networks round-trip bitwise through canonical JSON text") {
    Architecture arch{2, {5, 4}, 3};
    NetworkParams p = random_params(arch, 21);
    ActivationSpec spec = select_anchor(ActKind::tanh_k);

    std::string text = dump_canonical(to_json(p, spec));
    NetworkBundle nb = network_from_json(json::parse(text));

    REQUIRE(nb.arch.d0 == 2);
    REQUIRE(nb.arch.hidden == std::vector<int>{5, 4});
    REQUIRE(nb.arch.d_out == 3);
    REQUIRE(nb.spec.kind == spec.kind);
    for (std::size_t h = 0; h < p.W.size(); ++h) REQUIRE(nb.params.W[h] == p.W[h]);
    for (std::size_t h = 0; h < p.b.size(); ++h) REQUIRE(nb.params.b[h] == p.b[h]);

    // a second trip produces the same bytes
    REQUIRE(dump_canonical(to_json(nb.params, nb.spec)) == text);
}

TEST_CASE("malformed network objects are rejected with the right code") {
    Architecture arch{1, {2}, 1};
    ActivationSpec spec = select_anchor(ActKind::sigmoid);
    json good = to_json(zero_params(arch), spec);

    SECTION("missing keys") {
        json j = good;
        j.erase("weights");
        REQUIRE(error_code_of([&] { network_from_json(j); }) == "config-invalid");
    }
    SECTION("arch too short") {
        json j = good;
        j["arch"] = {1, 1};
        REQUIRE(error_code_of([&] { network_from_json(j); }) == "config-invalid");
    }
    SECTION("wrong number of weight blocks") {
        json j = good;
        j["weights"].erase(1);
        REQUIRE(error_code_of([&] { network_from_json(j); }) == "shape-mismatch");
    }
    SECTION("bias length disagrees") {
        json j = good;
        j["biases"][0] = {0.0, 0.0, 0.0};
        REQUIRE(error_code_of([&] { network_from_json(j); }) == "shape-mismatch");
    }
}

// ============================================================================
// Datasets
// ============================================================================
TEST_CASE("datasets round-trip and ragged input is refused") {
    Dataset d;
    d.X = MatrixXd::Random(2, 4);
    d.Y = MatrixXd::Random(3, 4);
    Dataset back = dataset_from_json(to_json(d));
    REQUIRE(back.X == d.X);
    REQUIRE(back.Y == d.Y);

    SECTION("ragged rows") {
        json j = to_json(d);
        j["X"][1] = {1.0};
        REQUIRE(error_code_of([&] { dataset_from_json(j); }) == "shape-mismatch");
    }
    SECTION("sample counts must agree") {
        json j = to_json(d);
        j["Y"] = {{1.0, 2.0}};
        REQUIRE(error_code_of([&] { dataset_from_json(j); }) == "shape-mismatch");
    }
}

// ============================================================================
// Certificates
// ============================================================================
TEST_CASE("certificates serialize their levels and optional counterexample") {
    Certificate c;
    c.verdict = "refuted";
    c.loss_at_point = 1.0;
    c.gradient_residual = 0.0;
    c.min_loss_delta = -3e-4;
    c.samples_tested = 42;
    c.levels.push_back({1e-2, -3e-4, 42});
    c.has_counterexample = true;
    c.counterexample = zero_params(Architecture{1, {1}, 1});
    c.counterexample_loss = 0.9997;
    c.counterexample_radius = 1e-2;
    ActivationSpec spec = select_anchor(ActKind::sigmoid);

    json j = to_json(c, spec);
    REQUIRE(j.at("verdict") == "refuted");
    REQUIRE(j.at("levels").size() == 1);
    REQUIRE(j.at("levels").at(0).at("radius").get<double>() == 1e-2);
    REQUIRE(j.contains("counterexample"));
    REQUIRE(j.at("counterexample_loss").get<double>() == 0.9997);

    c.has_counterexample = false;
    json j2 = to_json(c, spec);
    REQUIRE_FALSE(j2.contains("counterexample"));
}

// ============================================================================
// Canonical text
// ============================================================================
TEST_CASE("canonical dumps are sorted, indented, newline-terminated") {
    json j;
    j["b"] = 1;
    j["a"] = 2;
    REQUIRE(dump_canonical(j) == "{\n  \"a\": 2,\n  \"b\": 1\n}\n");
}

TEST_CASE("num17 renders doubles that read back exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, 3.141592653589793, -2.5e-17}) {
        double back = std::strtod(num17(v).c_str(), nullptr);
        REQUIRE(back == v);
    }
    REQUIRE(std::signbit(std::strtod(num17(-0.0).c_str(), nullptr)));
}

// ============================================================================
// Files
// ============================================================================
TEST_CASE("text files round-trip byte for byte") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "minforge_serialize_test.txt";
    std::string payload = "line one\nline two\n\ttabbed\n";
    write_text_file(p.string(), payload);
    REQUIRE(read_text_file(p.string()) == payload);

    write_text_file(p.string(), "{\"k\": [1, 2]}\n");
    REQUIRE(load_json_file(p.string()).at("k").at(1) == 2);

    write_text_file(p.string(), "{not json");
    REQUIRE(error_code_of([&] { load_json_file(p.string()); }) == "config-invalid");
    fs::remove(p);

    REQUIRE(error_code_of([&] { read_text_file((p / "absent").string()); }) ==
            "config-invalid");
}
