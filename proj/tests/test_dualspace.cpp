#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include <minforge/dualspace.hpp>
#include <minforge/rng.hpp>

using namespace minforge;
using Catch::Matchers::WithinAbs;
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

VectorXd vec(std::initializer_list<double> xs) {
    VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

} // namespace

// ============================================================================
// Feature-set enumeration
// ============================================================================
TEST_CASE("feature set enumerates ones, rows, and Hadamard products") {
    SECTION("a single input row") {
        MatrixXd X(1, 4);
        X << 0, 1, 2, 3;
        FeatureSet fs = build_feature_set(X);
        REQUIRE(fs.n == 4);
        REQUIRE(fs.ortho.size() == 2);
        REQUIRE(fs.positive.size() == 1);
        REQUIRE(fs.ortho[0].isApprox(vec({1, 1, 1, 1})));
        REQUIRE(fs.ortho[1].isApprox(vec({0, 1, 2, 3})));
        REQUIRE(fs.positive[0].isApprox(vec({0, 1, 4, 9})));
    }

    SECTION("the count formula d0^2/2 + 3 d0/2 + 1") {
        for (int d0 : {1, 2, 3, 4}) {
            MatrixXd X = MatrixXd::Random(d0, 20);
            FeatureSet fs = build_feature_set(X);
            int want = (d0 + 1) * (d0 + 2) / 2; // (d0^2 + 3 d0 + 2)/2, truncation-safe
            REQUIRE(static_cast<int>(fs.ortho.size() + fs.positive.size()) == want);
            REQUIRE(static_cast<int>(fs.positive.size()) == d0);
        }
    }

    SECTION("generic draws give a full-rank feature set") {
        Rng rng(7);
        MatrixXd X(3, 12);
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = rng.normal();
        FeatureSet fs = build_feature_set(X);
        std::vector<VectorXd> all = fs.ortho;
        all.insert(all.end(), fs.positive.begin(), fs.positive.end());
        REQUIRE(all.size() == 10);
        REQUIRE(numerical_rank(stack_rows(all, fs.n)) == 10);
    }
}

TEST_CASE("dimension and rank preconditions are checked separately") {
    SECTION("d0=1 needs N > 2") {
        MatrixXd X(1, 3);
        X << 0.3, -1.2, 0.9;
        REQUIRE(check_assumption1(X).count_ok);
    }
    SECTION("d0=2, N=5 fails the strict inequality") {
        MatrixXd X = MatrixXd::Random(2, 5);
        Assumption1Report rep = check_assumption1(X);
        REQUIRE_FALSE(rep.count_ok);
        REQUIRE_FALSE(rep.ok);
    }
    SECTION("duplicate input rows break the rank half") {
        MatrixXd X(2, 8);
        X.row(0) << 1, 2, 3, 4, 5, 6, 7, 8;
        X.row(1) = X.row(0);
        Assumption1Report rep = check_assumption1(X);
        REQUIRE(rep.count_ok);
        REQUIRE_FALSE(rep.rank_ok);
        REQUIRE_FALSE(rep.ok);
    }
}

// ============================================================================
// Dual positive vectors
// ============================================================================
TEST_CASE("dual vectors solve the hand-checkable sign systems") {
    SECTION("orthogonal to e1, positive against e2 in R^3") {
        std::vector<VectorXd> ortho = {vec({1, 0, 0})};
        std::vector<VectorXd> positive = {vec({0, 1, 0})};
        DualBasis db = dual_positive_vectors(ortho, positive, 3);
        REQUIRE(db.u.size() == 2);
        for (const auto& u : db.u) {
            REQUIRE_THAT(u(0), WithinAbs(0.0, 1e-12));
            REQUIRE(u(1) > 0.0);
            REQUIRE_THAT(u.norm(), WithinRel(1.0, 1e-12));
        }
    }

    SECTION("the integer-grid system: <u,1>=0, <u,x>=0, <u,x.*x> > 0") {
        // reference solution first: u = [1,-2,1,0] satisfies the same system
        VectorXd ones = vec({1, 1, 1, 1});
        VectorXd x = vec({0, 1, 2, 3});
        VectorXd xx = vec({0, 1, 4, 9});
        VectorXd ref = vec({1, -2, 1, 0});
        REQUIRE(ref.dot(ones) == 0.0);
        REQUIRE(ref.dot(x) == 0.0);
        REQUIRE(ref.dot(xx) == 2.0);

        MatrixXd X(1, 4);
        X << 0, 1, 2, 3;
        FeatureSet fs = build_feature_set(X);
        DualBasis db = dual_positive_vectors(fs.ortho, fs.positive, fs.n);
        REQUIRE(db.u.size() == 2); // N - |ortho| = 4 - 2
        for (const auto& u : db.u) {
            REQUIRE_THAT(u.dot(ones), WithinAbs(0.0, 1e-10));
            REQUIRE_THAT(u.dot(x), WithinAbs(0.0, 1e-10));
            REQUIRE(u.dot(xx) > 1e-8 * xx.norm());
        }
        REQUIRE(numerical_rank(stack_rows(db.u, 4)) == 2);
    }
}

TEST_CASE("dual basis properties hold across random target systems") {
    // random (N, d, L1) instances: d ortho targets, L1-d positive ones, all
    // drawn i.i.d. normal so joint independence holds almost surely
    Rng rng(2024);
    int done = 0;
    for (int inst = 0; inst < 40; ++inst) {
        int n = 3 + static_cast<int>(rng.uniform01() * 17.0); // 3..19
        int l1 = 2 + static_cast<int>(rng.uniform01() * (n - 2));
        int d = 1 + static_cast<int>(rng.uniform01() * (l1 - 1));
        if (d >= l1) d = l1 - 1;

        std::vector<VectorXd> ortho, positive;
        for (int i = 0; i < l1; ++i) {
            VectorXd v(n);
            for (int k = 0; k < n; ++k) v(k) = rng.normal();
            if (i < d)
                ortho.push_back(v);
            else
                positive.push_back(v);
        }
        DualBasis db = dual_positive_vectors(ortho, positive, n);
        INFO("N=" << n << " d=" << d << " L1=" << l1);
        REQUIRE(static_cast<int>(db.u.size()) == n - d);
        REQUIRE(numerical_rank(stack_rows(db.u, n)) == n - d);
        REQUIRE(db.max_ortho_resid <= 1e-10);
        REQUIRE(db.min_pos_margin >= 1e-8);
        for (const auto& u : db.u) REQUIRE_THAT(u.norm(), WithinRel(1.0, 1e-12));
        ++done;
    }
    REQUIRE(done == 40);
}

TEST_CASE("dual construction rejects ill-posed target systems") {
    SECTION("no positivity targets at all") {
        std::vector<VectorXd> ortho = {vec({1, 0, 0}), vec({0, 1, 0})};
        REQUIRE(error_code_of([&] { dual_positive_vectors(ortho, {}, 3); }) ==
                "d-not-less-than-L1");
    }
    SECTION("no orthogonality targets at all") {
        std::vector<VectorXd> positive = {vec({0, 1, 0})};
        REQUIRE(error_code_of([&] { dual_positive_vectors({}, positive, 3); }) ==
                "empty-dual-basis");
    }
    SECTION("dependent targets") {
        std::vector<VectorXd> ortho = {vec({1, 1, 0, 0}), vec({2, 2, 0, 0})};
        std::vector<VectorXd> positive = {vec({0, 0, 1, 0})};
        REQUIRE(error_code_of([&] { dual_positive_vectors(ortho, positive, 4); }) ==
                "dependent-targets");
    }
    SECTION("more targets than dimensions") {
        std::vector<VectorXd> ortho = {vec({1, 0}), vec({0, 1})};
        std::vector<VectorXd> positive = {vec({1, 1})};
        REQUIRE(error_code_of([&] { dual_positive_vectors(ortho, positive, 2); }) ==
                "dependent-targets");
    }
}

TEST_CASE("the positivity mixer I + ones is full rank with positive entries") {
    // spectrum {1 x (n-1), n+1}: the reason every dual direction picks up a
    // strictly positive share of every positivity target
    for (int n : {2, 4, 7}) {
        MatrixXd Q = MatrixXd::Identity(n, n) + MatrixXd::Ones(n, n);
        REQUIRE((Q.array() > 0.0).all());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q);
        VectorXd ev = es.eigenvalues();
        for (int i = 0; i < n - 1; ++i) REQUIRE_THAT(ev(i), WithinRel(1.0, 1e-12));
        REQUIRE_THAT(ev(n - 1), WithinRel(double(n + 1), 1e-12));
    }
}

// ============================================================================
// Row-space-preserving perturbation
// ============================================================================
TEST_CASE("rowspace-preserving perturbations keep rank((C+A)B) = rank(B)") {
    SECTION("zero B short-circuits to zero C") {
        Rng rng(5);
        MatrixXd A = MatrixXd::Random(3, 2);
        MatrixXd C = rowspace_preserving_perturb(A, MatrixXd::Zero(2, 6), 0.1, rng);
        REQUIRE(C.isZero(0.0));
    }

    SECTION("zero A with a full-rank square B") {
        Rng rng(6);
        MatrixXd B(3, 3);
        B << 2, 0, 1, -1, 3, 0, 0, 1, 4;
        MatrixXd C = rowspace_preserving_perturb(MatrixXd::Zero(3, 3), B, 0.5, rng);
        REQUIRE(C.norm() < 0.5);
        REQUIRE(numerical_rank(C * B) == 3);
    }

    SECTION("the perturbation repairs a rank-deficient product") {
        Rng rng(8);
        MatrixXd A = MatrixXd::Identity(3, 3);
        A(2, 2) = 0.0; // kills the third row of AB
        MatrixXd B(3, 5);
        B << 1, 0, 0, 2, 1, 0, 1, 0, -1, 2, 0, 0, 1, 1, -1;
        REQUIRE(numerical_rank(B) == 3);
        REQUIRE(numerical_rank(A * B) == 2);
        MatrixXd C = rowspace_preserving_perturb(A, B, 1e-2, rng);
        REQUIRE(numerical_rank((C + A) * B) == 3);
        REQUIRE(C.norm() < 1e-2);
    }

    SECTION("property: random chains, including flat B") {
        Rng rng(99);
        for (int inst = 0; inst < 25; ++inst) {
            int l1 = 2 + static_cast<int>(rng.uniform01() * 4.0);
            int l2 = 2 + static_cast<int>(rng.uniform01() * std::min(l1, 4));
            if (l2 > l1) l2 = l1;
            int nc = l2 + static_cast<int>(rng.uniform01() * 4.0);
            MatrixXd A(l1, l2), B(l2, nc);
            for (Eigen::Index j = 0; j < A.cols(); ++j)
                for (Eigen::Index i = 0; i < A.rows(); ++i) A(i, j) = rng.normal();
            for (Eigen::Index j = 0; j < B.cols(); ++j)
                for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, j) = rng.normal();
            if (inst % 3 == 0) B.row(0).setZero(); // exercise low rank too
            double eps = 1e-3;
            MatrixXd C = rowspace_preserving_perturb(A, B, eps, rng);
            INFO("instance " << inst << " l1=" << l1 << " l2=" << l2);
            REQUIRE(C.norm() < eps);
            REQUIRE(numerical_rank((C + A) * B) == numerical_rank(B));
        }
    }

    SECTION("shape and budget violations are rejected") {
        Rng rng(3);
        REQUIRE(error_code_of([&] {
                    rowspace_preserving_perturb(MatrixXd::Zero(2, 3),
                                                MatrixXd::Zero(2, 2), 0.1, rng);
                }) == "shape-mismatch");
        REQUIRE(error_code_of([&] {
                    rowspace_preserving_perturb(MatrixXd::Zero(2, 2),
                                                MatrixXd::Ones(2, 2), 0.0, rng);
                }) == "config-invalid");
    }
}

// ============================================================================
// Least squares
// ============================================================================
TEST_CASE("least squares returns the minimum-norm fit") {
    SECTION("identity design copies the labels") {
        MatrixXd Y = MatrixXd::Random(2, 5);
        MatrixXd V = least_squares(MatrixXd::Identity(5, 5), Y);
        REQUIRE((V - Y).norm() < 1e-12);
    }

    SECTION("consistent systems reach zero residual") {
        Rng rng(21);
        MatrixXd M(3, 7);
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = rng.normal();
        MatrixXd Vtrue(2, 3);
        Vtrue << 1, -2, 0.5, 0, 3, -1;
        MatrixXd Y = Vtrue * M;
        MatrixXd V = least_squares(M, Y);
        REQUIRE((Y - V * M).norm() < 1e-10 * Y.norm());
    }

    SECTION("matches the normal-equations oracle on a full-row-rank design") {
        Rng rng(22);
        MatrixXd M(4, 6), Y(2, 6);
        for (Eigen::Index j = 0; j < 6; ++j) {
            for (Eigen::Index i = 0; i < 4; ++i) M(i, j) = rng.normal();
            for (Eigen::Index i = 0; i < 2; ++i) Y(i, j) = rng.normal();
        }
        MatrixXd V = least_squares(M, Y);
        MatrixXd Vref = (M * M.transpose()).ldlt().solve(M * Y.transpose()).transpose();
        REQUIRE((V - Vref).norm() < 1e-8 * (1.0 + Vref.norm()));
    }

    SECTION("the residual is orthogonal to the row space") {
        Rng rng(23);
        MatrixXd M(3, 8), Y(2, 8);
        for (Eigen::Index j = 0; j < 8; ++j) {
            for (Eigen::Index i = 0; i < 3; ++i) M(i, j) = rng.normal();
            for (Eigen::Index i = 0; i < 2; ++i) Y(i, j) = rng.normal();
        }
        M.row(2) = M.row(0) - 2.0 * M.row(1); // rank-deficient on purpose
        MatrixXd V = least_squares(M, Y);
        MatrixXd R = Y - V * M;
        REQUIRE((R * M.transpose()).norm() < 1e-9 * std::max(1.0, Y.norm()));
    }

    SECTION("mismatched sample counts are rejected") {
        REQUIRE(error_code_of([&] {
                    least_squares(MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 4));
                }) == "shape-mismatch");
    }
}
