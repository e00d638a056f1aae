#pragma once
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "activation.hpp"
#include "certify.hpp"
#include "errors.hpp"
#include "network.hpp"

namespace minforge {

using nlohmann::json;

// Rebuild a full activation spec from (kind, anchor, delta). Branch-switching
// kinds resolve to the segment the anchor actually sits on.
inline ActivationSpec spec_for(ActKind kind, double anchor, double delta) {
    ActivationSpec s;
    s.kind = kind;
    s.anchor = anchor;
    s.delta = delta;
    switch (kind) {
        case ActKind::relu:
        case ActKind::leaky_relu:
        case ActKind::selu:
        case ActKind::elu: {
            bool neg_side = anchor + delta < 0.0;
            bool pos_side = anchor - delta > 0.0;
            require(neg_side || pos_side, "no-valid-anchor",
                    "segment straddles the kink at 0");
            bool linear_here =
                pos_side || kind == ActKind::relu || kind == ActKind::leaky_relu;
            if (linear_here) {
                ActDerivs e = act_eval(kind, anchor);
                s.slope = e.d1;
                s.offset = e.v;
            }
            break; // elu/selu on the negative side stay smooth
        }
        default:
            break;
    }
    validate_anchor(s);
    return s;
}

inline json to_json(const ActivationSpec& s) {
    return json{{"kind", to_string(s.kind)}, {"anchor", s.anchor}, {"delta", s.delta}};
}

inline ActivationSpec activation_from_json(const json& j) {
    require(j.contains("kind") && j.contains("anchor") && j.contains("delta"),
            "config-invalid", "activation object needs kind, anchor, delta");
    return spec_for(act_kind_from_string(j.at("kind").get<std::string>()),
                    j.at("anchor").get<double>(), j.at("delta").get<double>());
}

inline json matrix_row_major(const MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

inline MatrixXd matrix_from_row_major(const json& arr, Eigen::Index rows,
                                      Eigen::Index cols) {
    require(static_cast<Eigen::Index>(arr.size()) == rows * cols, "shape-mismatch",
            "flattened matrix length disagrees with the architecture");
    MatrixXd m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = arr.at(static_cast<std::size_t>(k++)).get<double>();
    return m;
}

inline json to_json(const NetworkParams& p, const ActivationSpec& spec) {
    Architecture arch = arch_of(p);
    json j;
    j["arch"] = json::array();
    j["arch"].push_back(arch.d0);
    for (int w : arch.hidden) j["arch"].push_back(w);
    j["arch"].push_back(arch.d_out);
    j["weights"] = json::array();
    for (const auto& W : p.W) j["weights"].push_back(matrix_row_major(W));
    j["biases"] = json::array();
    for (const auto& b : p.b) {
        json arr = json::array();
        for (Eigen::Index i = 0; i < b.size(); ++i) arr.push_back(b(i));
        j["biases"].push_back(arr);
    }
    j["activation"] = to_json(spec);
    return j;
}

struct NetworkBundle {
    NetworkParams params;
    ActivationSpec spec;
    Architecture arch;
};

inline NetworkBundle network_from_json(const json& j) {
    require(j.contains("arch") && j.contains("weights") && j.contains("biases") &&
                j.contains("activation"),
            "config-invalid", "network object needs arch, weights, biases, activation");
    NetworkBundle nb;
    std::vector<int> dims = j.at("arch").get<std::vector<int>>();
    require(dims.size() >= 3, "config-invalid",
            "arch needs input, at least one hidden, and output dims");
    nb.arch.d0 = dims.front();
    nb.arch.d_out = dims.back();
    nb.arch.hidden.assign(dims.begin() + 1, dims.end() - 1);
    nb.arch.validate();

    const json& ws = j.at("weights");
    const json& bs = j.at("biases");
    const int H = nb.arch.depth();
    require(static_cast<int>(ws.size()) == H + 1, "shape-mismatch",
            "weight list length disagrees with arch");
    require(static_cast<int>(bs.size()) == H, "shape-mismatch",
            "bias list length disagrees with arch");
    for (int h = 1; h <= H + 1; ++h)
        nb.params.W.push_back(matrix_from_row_major(
            ws.at(static_cast<std::size_t>(h - 1)), nb.arch.dim(h), nb.arch.dim(h - 1)));
    for (int h = 1; h <= H; ++h) {
        const json& arr = bs.at(static_cast<std::size_t>(h - 1));
        require(static_cast<int>(arr.size()) == nb.arch.dim(h), "shape-mismatch",
                "bias length disagrees with arch");
        VectorXd b(nb.arch.dim(h));
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
        nb.params.b.push_back(std::move(b));
    }
    nb.spec = activation_from_json(j.at("activation"));
    return nb;
}

inline json to_json(const Dataset& d) {
    json j;
    j["X"] = json::array();
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < d.X.cols(); ++k) row.push_back(d.X(i, k));
        j["X"].push_back(row);
    }
    j["Y"] = json::array();
    for (Eigen::Index i = 0; i < d.Y.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < d.Y.cols(); ++k) row.push_back(d.Y(i, k));
        j["Y"].push_back(row);
    }
    return j;
}

inline Dataset dataset_from_json(const json& j) {
    require(j.contains("X") && j.contains("Y"), "config-invalid",
            "dataset object needs X and Y");
    auto load = [](const json& rows) {
        require(rows.is_array() && !rows.empty(), "shape-mismatch",
                "data matrix must be a non-empty array of rows");
        const std::size_t cols = rows.at(0).size();
        MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            require(rows.at(i).size() == cols, "shape-mismatch", "ragged data rows");
            for (std::size_t k = 0; k < cols; ++k)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    rows.at(i).at(k).get<double>();
        }
        return m;
    };
    Dataset d;
    d.X = load(j.at("X"));
    d.Y = load(j.at("Y"));
    require(d.X.cols() == d.Y.cols(), "shape-mismatch",
            "X and Y disagree on the sample count");
    return d;
}

inline json to_json(const Certificate& c, const ActivationSpec& spec) {
    json j;
    j["verdict"] = c.verdict;
    j["loss_at_point"] = c.loss_at_point;
    j["gradient_residual"] = c.gradient_residual;
    j["certified_radius"] = c.certified_radius;
    j["min_loss_delta"] = c.min_loss_delta;
    j["samples_tested"] = c.samples_tested;
    j["levels"] = json::array();
    for (const auto& l : c.levels)
        j["levels"].push_back(
            {{"radius", l.radius}, {"min_delta", l.min_delta}, {"tested", l.tested}});
    if (c.has_counterexample) {
        j["counterexample"] = to_json(c.counterexample, spec);
        j["counterexample_loss"] = c.counterexample_loss;
        j["counterexample_radius"] = c.counterexample_radius;
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "config-invalid", "cannot open for writing: " + path);
    out << text;
    require(static_cast<bool>(out), "config-invalid", "short write: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "config-invalid", "cannot open for reading: " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline json load_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    require(!j.is_discarded(), "config-invalid", "malformed JSON in " + path);
    return j;
}

// canonical serialization: sorted keys (json objects already sort), two-space
// indent, '\n' terminated; identical structures give identical bytes
inline std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

// 17 significant digits: enough to round-trip any double, stable across runs
inline std::string num17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace minforge
