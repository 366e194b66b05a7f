#include <gtest/gtest.h>

#include <random>

#include "kvp/selftest.hpp"
#include "kvp/tensor.hpp"

using namespace kvp;

TEST(SymTensor, ComponentAccessAndSymmetry) {
    SymTensor t(2);
    t(0, 0) = 1.0;
    t(1, 1) = 2.0;
    t(0, 1) = 3.0;
    EXPECT_EQ(t(1, 0), 3.0);
    EXPECT_EQ(t.trace(), 3.0);

    SymTensor u(3);
    u(0, 2) = 5.0;
    u(1, 2) = 7.0;
    EXPECT_EQ(u(2, 0), 5.0);
    EXPECT_EQ(u(2, 1), 7.0);
    EXPECT_EQ(u.trace(), 0.0);
}

TEST(SymTensor, BadDimThrows) {
    EXPECT_THROW(SymTensor(1), BadInput);
    EXPECT_THROW(SymTensor(4), BadInput);
}

TEST(SymTensor, DdotCountsOffDiagonalTwice) {
    SymTensor t(2);
    t(0, 1) = 3.0;
    EXPECT_DOUBLE_EQ(ddot(t, t), 18.0);   // 2 * 3^2
    EXPECT_DOUBLE_EQ(frob_norm(t), std::sqrt(18.0));

    SymTensor u(3);
    u(0, 0) = 1.0;
    u(1, 2) = 2.0;
    EXPECT_DOUBLE_EQ(ddot(u, u), 1.0 + 2.0 * 4.0);
}

TEST(SymTensor, DeviatorIsTraceFree) {
    std::mt19937_64 rng(7);
    for (int dim : {2, 3})
        for (int k = 0; k < 100; ++k) {
            const SymTensor a = random_sym_tensor(rng, 2.0, dim);
            const SymTensor d = deviator(a);
            EXPECT_NEAR(d.trace(), 0.0, 1e-14);
            // a = deviator + spherical part, orthogonal split
            SymTensor sph = a - d;
            EXPECT_NEAR(ddot(d, sph), 0.0, 1e-13);
        }
}

TEST(Material, ValidateRejectsBadParams) {
    MaterialParams p{2.0, 0.3, 0.5, 1.0};
    EXPECT_NO_THROW(p.validate(2));
    EXPECT_NO_THROW(p.validate(3));

    MaterialParams bad = p;
    bad.E = 0.0;
    EXPECT_THROW(bad.validate(2), BadInput);
    bad = p;
    bad.eta = -1.0;
    EXPECT_THROW(bad.validate(2), BadInput);
    bad = p;
    bad.a = 0.0;
    EXPECT_THROW(bad.validate(2), BadInput);
    bad = p;
    bad.nu = -1.0;
    EXPECT_THROW(bad.validate(2), BadInput);
    // nu = 0.7 is fine in d=2 (bound 1/(d-1) = 1) but not in d=3 (bound 1/2)
    bad = p;
    bad.nu = 0.7;
    EXPECT_NO_THROW(bad.validate(2));
    EXPECT_THROW(bad.validate(3), BadInput);
}

TEST(Material, ComplianceAndStiffnessAreInverse) {
    std::mt19937_64 rng(11);
    for (int dim : {2, 3})
        for (int k = 0; k < 200; ++k) {
            MaterialParams p{2.0 + 0.01 * k, 0.3, 0.5, 1.0};
            const SymTensor tau = random_sym_tensor(rng, 3.0, dim);
            EXPECT_LT(frob_norm(apply_C(p, apply_S(p, tau)) - tau), 1e-13);
            EXPECT_LT(frob_norm(apply_S(p, apply_C(p, tau)) - tau), 1e-13);
        }
}

TEST(Material, EnergyNormSplitsIntoDeviatoricAndSpherical) {
    // ||tau||_S^2 = (1+nu)/E |tau^D|^2 + (1-(d-1)nu)/E (tr tau)^2 / d
    std::mt19937_64 rng(13);
    for (int dim : {2, 3})
        for (int k = 0; k < 200; ++k) {
            MaterialParams p{1.7, 0.25, 0.5, 1.0};
            const SymTensor tau = random_sym_tensor(rng, 3.0, dim);
            const double dev = frob_norm(deviator(tau));
            const double tr = tau.trace();
            const double expected = (1.0 + p.nu) / p.E * dev * dev +
                                    (1.0 - (dim - 1) * p.nu) / p.E * tr * tr / dim;
            EXPECT_NEAR(norm_S_sq(p, tau), expected, 1e-13 * (1.0 + expected));
        }
}

TEST(Material, EquivalenceConstantBoundsBothNorms) {
    std::mt19937_64 rng(17);
    for (int dim : {2, 3}) {
        MaterialParams p{2.0, 0.3, 0.5, 1.0};
        const double c = equivalence_constant(p, dim);
        for (int k = 0; k < 500; ++k) {
            const SymTensor tau = random_sym_tensor(rng, 2.0, dim);
            const double f2 = ddot(tau, tau);
            EXPECT_LE(norm_S_sq(p, tau), c * f2 * (1.0 + 1e-14));
            EXPECT_LE(f2, c * norm_S_sq(p, tau) * (1.0 + 1e-14));
            EXPECT_LE(norm_C_sq(p, tau), c * f2 * (1.0 + 1e-14));
        }
    }
}

TEST(Material, HardeningRatio) {
    MaterialParams p{2.0, 0.3, 0.5, 1.0};
    EXPECT_DOUBLE_EQ(p.b(), 1.0 * 1.3 / 2.0);
}
