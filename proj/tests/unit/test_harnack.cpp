#include <semigroup/errors.hpp>
#include <semigroup/harnack.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace semigroup;

namespace {

EstimatorConfig config(std::size_t samples, int steps = 64, double T = 1.0) {
    EstimatorConfig c;
    c.samples = samples;
    c.steps = steps;
    c.T = T;
    c.seed = 11;
    return c;
}

FieldBounds declared(double v_sup, double div_sup) {
    FieldBounds b;
    b.v_sup = v_sup;
    b.div_sup = div_sup;
    return b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

const ScalarFunction bump = [](const Vec& p) { return std::exp(-p.squaredNorm() / 4.0) + 0.1; };

}  // namespace

TEST(GaussLegendre, IntegratesHighDegreePolynomialsExactly) {
    const auto q = gauss_legendre_unit(16);
    ASSERT_EQ(q.size(), 16u);
    double w = 0.0, m31 = 0.0;
    for (const auto& [s, weight] : q) {
        EXPECT_GT(s, 0.0);
        EXPECT_LT(s, 1.0);
        w += weight;
        m31 += weight * std::pow(s, 31);
    }
    EXPECT_NEAR(w, 1.0, 1e-14);
    EXPECT_NEAR(m31, 1.0 / 32.0, 1e-14);
    EXPECT_THROW(gauss_legendre_unit(0), ConfigError);
}

TEST(Verdict, ClassificationBands) {
    EXPECT_EQ(classify(0.5, 0.1), Verdict::Holds);
    EXPECT_EQ(classify(0.0, 0.0), Verdict::Holds);
    EXPECT_EQ(classify(-0.2, 0.1), Verdict::ViolatedWithinNoise);
    EXPECT_EQ(classify(-0.5, 0.1), Verdict::Violated);
    EXPECT_EQ(to_string(Verdict::ViolatedWithinNoise), "violated-within-noise");
}

TEST(DiffeoFamily, TranslationAndIdentityFields) {
    const DiffeoFamily tr = DiffeoFamily::translation(make_vec({0.5, -1.0}));
    EXPECT_TRUE(tr.constant_field);
    EXPECT_LT((tr.F(1.0, make_vec({1.0, 1.0})) - make_vec({1.5, 0.0})).norm(), 1e-15);
    EXPECT_LT((tr.field(0.3, make_vec({2.0, 7.0})) - make_vec({0.5, -1.0})).norm(), 1e-15);
    const DiffeoFamily id = DiffeoFamily::identity(2);
    EXPECT_EQ(id.field(0.5, make_vec({1.0, 2.0})).norm(), 0.0);

    DiffeoFamily collapse = tr;
    collapse.dF = [](double, const Vec&) { return Mat(Mat::Zero(2, 2)); };
    EXPECT_THROW(collapse.field(0.5, make_vec({0.0, 0.0})), DomainError);
}

TEST(SupNorms, RegionGridAndDeclaredValues) {
    const auto flat = EuclideanModel::flat(1);
    FieldBounds b;
    EXPECT_THROW(resolve_sup_norms(*flat, linear_field(identity(1)), b), ConfigError);
    b.region = Region{make_vec({-2.0}), make_vec({1.0}), 7};
    const auto [v, d] = resolve_sup_norms(*flat, linear_field(identity(1)), b);
    EXPECT_NEAR(v, 2.0, 1e-14);
    EXPECT_NEAR(d, 1.0, 1e-10);
    b.v_sup = 5.0;
    EXPECT_DOUBLE_EQ(resolve_sup_norms(*flat, linear_field(identity(1)), b).first, 5.0);
}

TEST(AlphaConstants, FlatBrownianClosedForm) {
    // Psi = B_T / T ~ N(0, 2 / T) for linear h on R^1.
    const auto flat = EuclideanModel::flat(1);
    const auto cfg = config(40000, 32, 1.0);
    const double delta = 1.0;
    const AlphaConstants a =
        alpha_constants(*flat, constant_field(make_vec({1.0})), declared(1.0, 0.0), make_vec({0.0}), delta,
                        AlphaMode::Empirical, cfg);
    EXPECT_LE(std::abs(a.alpha2 - std::sqrt(2.0) / 2.0), 3.0 * a.alpha2_se);
    // E exp(a |Z| sigma) = 2 exp(a^2 sigma^2 / 2) Phi(a sigma), a = 1 / (2 delta), sigma = sqrt(2).
    const double as = std::sqrt(2.0) / (2.0 * delta);
    const double alpha1 = delta * std::log(2.0 * std::exp(0.5 * as * as) * normal_cdf(as));
    EXPECT_LE(std::abs(a.alpha1 - alpha1), 3.0 * a.alpha1_se);
    EXPECT_EQ(a.c, 0.0);
}

TEST(AlphaConstants, ZeroFieldGivesZeroConstants) {
    const auto flat = EuclideanModel::flat(2);
    const AlphaConstants a = alpha_constants(*flat, constant_field(Vec::Zero(2)), declared(0.0, 0.0),
                                             make_vec({0.0, 0.0}), 0.5, AlphaMode::Empirical, config(500));
    EXPECT_EQ(a.alpha1, 0.0);
    EXPECT_EQ(a.alpha2, 0.0);
}

TEST(AlphaConstants, OrnsteinUhlenbeckSecondMoment) {
    // n = 1: Theta = 1, div Z = -lambda, so E|Psi|^2 = 2 int (1/T + lambda s / T)^2 ds.
    const double lambda = 1.0;
    const auto ou = EuclideanModel::ornstein_uhlenbeck(1, lambda);
    const AlphaConstants a = alpha_constants(*ou, constant_field(make_vec({1.0})), declared(1.0, 0.0),
                                             make_vec({0.3}), 1.0, AlphaMode::Empirical, config(40000, 256));
    const double m2 = 2.0 * ((1.0 + lambda) * (1.0 + lambda) * (1.0 + lambda) - 1.0) / (3.0 * lambda);
    EXPECT_LE(std::abs(a.alpha2 - 0.5 * std::sqrt(m2)), 3.0 * a.alpha2_se + 5e-3);
}

TEST(AlphaConstants, AnalyticBoundsDominateEmpirical) {
    const auto ou = EuclideanModel::ornstein_uhlenbeck(2, 0.5);
    const VectorField v{[](const Vec& p) { return make_vec({std::sin(p(1)), 0.5}); }, {}};
    FieldBounds b;
    b.region = Region{make_vec({-2.0, -2.0}), make_vec({2.0, 2.0}), 9};
    const auto cfg = config(20000, 64);
    const AlphaConstants e = alpha_constants(*ou, v, b, make_vec({0.2, 0.1}), 1.0, AlphaMode::Empirical, cfg);
    const AlphaConstants a = alpha_constants(*ou, v, b, make_vec({0.2, 0.1}), 1.0, AlphaMode::Analytic, cfg);
    EXPECT_GE(a.alpha2, e.alpha2 - 3.0 * e.alpha2_se);
    EXPECT_GE(a.alpha1, e.alpha1 - 3.0 * e.alpha1_se);
    EXPECT_NEAR(a.c, std::log(2.0), 1e-15);
    EXPECT_EQ(a.alpha1_se, 0.0);
    EXPECT_THROW(alpha_constants(*EuclideanModel::custom(1, {"-x1"}), constant_field(make_vec({1.0})),
                                 declared(1, 0), make_vec({0.0}), 1.0, AlphaMode::Analytic, cfg),
                 ConfigError);
    EXPECT_THROW(parse_alpha_mode("guess"), ConfigError);
}

TEST(GradientInequalities, HoldOnOrnsteinUhlenbeck) {
    const auto ou = EuclideanModel::ornstein_uhlenbeck(1, 1.0);
    const VectorField v = constant_field(make_vec({1.0}));
    const auto cfg = config(20000, 64);
    const HarnackReport ent = entropy_gradient_check(*ou, bump, 0.1, v, declared(1, 0), make_vec({0.5}), 0.5, cfg);
    EXPECT_EQ(ent.verdict, Verdict::Holds) << ent.slack << " +- " << ent.slack_se;
    const HarnackReport l2 = l2_gradient_check(*ou, bump, v, declared(1, 0), make_vec({0.5}), cfg);
    EXPECT_EQ(l2.verdict, Verdict::Holds) << l2.slack << " +- " << l2.slack_se;
    EXPECT_GT(l2.slack_se, 0.0);
}

TEST(ShiftHarnack, TranslationHoldsForBothForms) {
    const auto flat = EuclideanModel::flat(1);
    const DiffeoFamily tr = DiffeoFamily::translation(make_vec({0.5}));
    const auto cfg = config(20000, 32);
    for (HarnackForm form : {HarnackForm::Power, HarnackForm::L2}) {
        const HarnackReport r = shift_harnack_verify(*flat, bump, 0.1, tr, {}, make_vec({0.0}), 2.0, form, cfg);
        EXPECT_GE(r.slack, -3.0 * r.slack_se) << to_string(form);
        EXPECT_EQ(r.nodes.size(), 16u);
    }
}

TEST(ShiftHarnack, UnitPowerIsTrivialForNonzeroShift) {
    const auto flat = EuclideanModel::flat(1);
    const HarnackReport r = shift_harnack_verify(*flat, bump, 0.1, DiffeoFamily::translation(make_vec({0.5})), {},
                                                 make_vec({0.0}), 1.0, HarnackForm::Power, config(500, 16));
    EXPECT_TRUE(std::isinf(r.rhs.value()));
    EXPECT_EQ(r.verdict, Verdict::Holds);
}

TEST(ShiftHarnack, NullShiftIsTight) {
    const auto ou = EuclideanModel::ornstein_uhlenbeck(1, 1.0);
    const HarnackReport r = shift_harnack_verify(*ou, bump, 0.1, DiffeoFamily::identity(1), {}, make_vec({0.3}), 1.0,
                                                 HarnackForm::Power, config(2000, 16));
    EXPECT_DOUBLE_EQ(r.ratio(), 1.0);
    EXPECT_EQ(r.slack, 0.0);
}

TEST(ShiftHarnack, DomainErrors) {
    const auto flat = EuclideanModel::flat(1);
    const DiffeoFamily tr = DiffeoFamily::translation(make_vec({0.5}));
    const auto cfg = config(500, 16);
    EXPECT_THROW(shift_harnack_verify(*flat, bump, 0.1, tr, {}, make_vec({0.0}), 0.5, HarnackForm::Power, cfg),
                 DomainError);
    EXPECT_THROW(shift_harnack_verify(*flat, bump, 0.0, tr, {}, make_vec({0.0}), 2.0, HarnackForm::Power, cfg),
                 DomainError);
    const ScalarFunction line = [](const Vec& p) { return p(0); };
    EXPECT_THROW(shift_harnack_verify(*flat, line, 0.1, tr, {}, make_vec({0.0}), 2.0, HarnackForm::Power, cfg),
                 DomainError);
    EXPECT_THROW(parse_harnack_form("cubic"), ConfigError);
}
