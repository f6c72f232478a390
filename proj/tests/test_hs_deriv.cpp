#include <gtest/gtest.h>

#include "mhs/hs_deriv.hpp"
#include "oracle.hpp"

using namespace mhs;

namespace {

Algebra qx() { return Algebra::free({"x"}, "A"); }
Algebra qxy(std::string name = "B") { return Algebra::free({"x", "y"}, std::move(name)); }

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return ErrorCode::invalid_argument;
}

// Classical (id, E_1..E_n) on `a` with random generator images of degree <= 2.
ClassicalSpec random_classical(const Algebra& a, int n, Sampler& rng)
{
    std::vector<std::vector<Element>> images;
    for (int k = 1; k <= n; ++k) {
        std::vector<Element> row;
        for (std::size_t v = 0; v < a.variable_count(); ++v)
            row.push_back(rng.element(a, 2));
        images.push_back(std::move(row));
    }
    return ClassicalSpec(Morphism::identity(a), std::move(images));
}

std::vector<std::vector<Poly>> image_polys(const ClassicalSpec& e)
{
    std::vector<std::vector<Poly>> out;
    for (const auto& row : e.images()) {
        std::vector<Poly> r;
        for (const auto& el : row)
            r.push_back(el.poly());
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Poly> d0_polys(const ClassicalSpec& e)
{
    std::vector<Poly> out;
    for (const auto& im : e.d0().images())
        out.push_back(im.poly());
    return out;
}

// ej2: A = Q[x], B1 = Q[x,y], B2 = B1 x B1, phi11(b, b') = (0, b b'),
// D1(x) = 1, D2(x) = (0, y).
struct ProductExample {
    Algebra a = qx();
    Algebra b1 = qxy("B1");
    Algebra b2 = Algebra::product(b1, b1, "B2");
    Morphism theta{a, b1, {b1.variable(0)}};
    Morphism g2{a, b2, {make_pair(b2, b1.variable(0), b1.variable(0))}};
    Morphism diag{b1, b2, {make_pair(b2, b1.variable(0), b1.variable(0)), make_pair(b2, b1.variable(1), b1.variable(1))}};
    SystemRef sys = certify(StructureSystem(a, {b1, b2}, {theta, g2},
                                            {BilinearMap{1, 1, {MulForm{make_pair(b2, b1.zero(), b1.one()), diag, diag}}}}),
                            30, 0);
    DerivationSpec spec{sys, {theta, g2}, {{b1.one()}, {make_pair(b2, b1.zero(), b1.variable(1))}}, "E"};
};

} // namespace

TEST(HsEval, DividedDerivativesOracle)
{
    // D_k(x) = [k == 1], D_k(y) = 0 gives (1/k!) d^k/dx^k.
    const Algebra b = qxy();
    const int n = 4;
    std::vector<std::vector<Element>> images;
    for (int k = 1; k <= n; ++k)
        images.push_back({k == 1 ? b.one() : b.zero(), b.zero()});
    const ClassicalSpec e(Morphism::identity(b), images);
    Sampler rng(1);
    for (int t = 0; t < 20; ++t) {
        const Element f = rng.element(b, 5);
        for (int k = 0; k <= n; ++k)
            EXPECT_EQ(classical_eval(e, k, f).poly(), oracle::divided_derivative(f.poly(), 0, static_cast<unsigned>(k)))
                << "f=" << f.to_string() << " k=" << k;
    }
}

TEST(HsEval, TaylorOracleOnRandomClassicalSpecs)
{
    const Algebra b = qxy();
    Sampler rng(17);
    for (int n = 1; n <= 3; ++n)
        for (int s = 0; s < 5; ++s) {
            const ClassicalSpec e = random_classical(b, n, rng);
            for (int t = 0; t < 5; ++t) {
                const Element f = rng.element(b, 3);
                for (int k = 1; k <= n; ++k)
                    EXPECT_EQ(classical_eval(e, k, f).poly(),
                              oracle::taylor_coefficient(f.poly(), d0_polys(e), image_polys(e), 2, static_cast<unsigned>(k)));
            }
        }
}

TEST(HsEval, ClosedOperatorsOnProductSystem)
{
    ProductExample ex;
    const Poly x = Poly::variable(0);
    Sampler rng(3);
    for (int t = 0; t < 20; ++t) {
        const Element f = rng.element(ex.a, 4);
        const Element d2 = hs_eval(ex.spec, 2, f);
        // Second component: y d/dx + 1/2 d^2/dx^2; first component vanishes.
        const Poly expect = Poly::variable(1) * oracle::derivative(f.poly(), 0) + oracle::divided_derivative(f.poly(), 0, 2);
        EXPECT_TRUE(d2.first().is_zero());
        EXPECT_EQ(d2.second().poly(), expect);
        EXPECT_EQ(hs_eval(ex.spec, 1, f).poly(), oracle::derivative(f.poly(), 0));
    }
    EXPECT_EQ(hs_eval(ex.spec, 2, x * x).to_string(), "(0, 2*x*y + 1)");
}

TEST(HsEval, LinearityAndConstants)
{
    ProductExample ex;
    Sampler rng(4);
    for (int t = 0; t < 20; ++t) {
        const Element f = rng.element(ex.a, 3), g = rng.element(ex.a, 3);
        const Rational c(-5, 3);
        for (int k = 0; k <= 2; ++k)
            EXPECT_EQ(hs_eval(ex.spec, k, ex.a.constant(c) * f + g), ex.sys->level(k).constant(c) * hs_eval(ex.spec, k, f) + hs_eval(ex.spec, k, g));
    }
    EXPECT_TRUE(hs_eval(ex.spec, 1, ex.a.constant(7)).is_zero());
    EXPECT_TRUE(hs_eval(ex.spec, 2, ex.a.constant(7)).is_zero());
    EXPECT_EQ(hs_eval(ex.spec, 0, ex.a.constant(7)), ex.a.constant(7));
    EXPECT_EQ(code_of([&] { hs_eval(ex.spec, 3, ex.a.one()); }), ErrorCode::level_out_of_range);
    EXPECT_EQ(code_of([&] { hs_eval(ex.spec, 1, Poly::variable(1)); }), ErrorCode::unknown_variable);
}

TEST(HsVerify, AcceptsProductExample)
{
    ProductExample ex;
    auto report = hs_verify(ex.spec, 100, 0);
    EXPECT_TRUE(report.ok()) << (report.first_failure() ? report.first_failure()->detail : "");
}

TEST(HsVerify, RejectsIllDefinedSpecs)
{
    // D0 : Q[x]/<x^2> -> Q[x], x -> x does not kill the ideal.
    const Algebra q = Algebra::quotient({"x"}, {Monomial::variable(0, 2)}, "Q");
    const Algebra a = qx();
    const Morphism lift(q, a, {a.variable(0)});
    auto msys = unvalidated(make_multiplication_system(Morphism(q, a, {a.zero()}), 1));
    auto mreport = hs_verify(DerivationSpec(msys, {lift}, {{a.zero()}}), 10, 0);
    ASSERT_FALSE(mreport.ok());
    EXPECT_EQ(mreport.first_failure()->name, "level0-homomorphisms");
    // Quotient not killed: Q[x]/<x^2> with D_1(x) = 1 gives D_1(x^2) = 2x.
    const Morphism qid = Morphism::identity(q);
    auto qsys = certify(make_multiplication_system(qid, 1), 20, 0);
    const DerivationSpec dq(qsys, {qid}, {{q.one()}});
    auto qreport = hs_verify(dq, 20, 0);
    ASSERT_FALSE(qreport.ok());
    EXPECT_EQ(qreport.first_failure()->name, "well-defined-on-quotient");
    EXPECT_EQ(qreport.first_failure()->detail, "D1(x^2) = 2*x != 0");
}

TEST(HsVerify, SplitOrderWitnessForNonAssociativePhi)
{
    // Scalars lambda22 = 2 and 1 elsewhere fail associativity at (1,1,2), so
    // D_4(x^4) depends on how the Leibniz recursion splits x^4.
    const Algebra a = qx();
    const Morphism id = Morphism::identity(a);
    auto form = [&](int i, int j, int c) { return BilinearMap{i, j, {MulForm{a.constant(c), id, id}}}; };
    StructureSystem s(a, {a, a, a, a}, {id, id, id, id}, {form(1, 1, 1), form(1, 2, 1), form(1, 3, 1), form(2, 2, 2)});
    const DerivationSpec d(unvalidated(std::move(s)), {id, id, id, id}, {{a.one()}, {a.zero()}, {a.zero()}, {a.zero()}});
    auto report = hs_verify(d, 50, 0);
    ASSERT_FALSE(report.ok());
    const auto* f = report.find("split-order-independent");
    ASSERT_NE(f, nullptr);
    EXPECT_FALSE(f->passed);
    EXPECT_NE(f->detail.find("another split gives"), std::string::npos);
}

TEST(HomRoundTrip, FromToHom)
{
    ProductExample ex;
    const HomEvaluator hom = to_hom(ex.spec, 50, 0);
    const DerivationSpec back = from_hom(ex.sys, hom.generator_images());
    EXPECT_EQ(back, ex.spec);
    const ExtElement img = hom(ex.a.variable(0));
    EXPECT_EQ(img[0], ex.a.variable(0));
    EXPECT_EQ(img[2], make_pair(ex.b2, ex.b1.zero(), ex.b1.variable(1)));
    Sampler rng(8);
    for (int t = 0; t < 20; ++t) {
        const Element f = rng.element(ex.a, 3), g = rng.element(ex.a, 3);
        EXPECT_EQ(hom(f * g), hom(f) * hom(g));
        EXPECT_EQ(hom(f + g), hom(f) + hom(g));
    }
}

TEST(HomRoundTrip, DaggerViolations)
{
    ProductExample ex;
    const DerivationSpec off(ex.sys, {Morphism(ex.a, ex.b1, {ex.b1.variable(1)}), ex.g2}, ex.spec.images());
    EXPECT_EQ(code_of([&] { to_hom(off); }), ErrorCode::dagger_violation);
    std::vector<ExtElement> bad{ExtElement(ex.sys, {ex.a.constant(2), ex.b1.zero(), ex.b2.zero()})};
    EXPECT_EQ(code_of([&] { from_hom(ex.sys, bad); }), ErrorCode::dagger_violation);
    const Algebra a = qx();
    auto loose = unvalidated(make_multiplication_system(Morphism::identity(a), 1));
    EXPECT_EQ(code_of([&] { to_hom(DerivationSpec(loose, {Morphism::identity(a)}, {{a.one()}})); }),
              ErrorCode::unvalidated_system);
}

TEST(ConnectingChain, CompatibilityAndComposition)
{
    const Algebra b1 = qx();
    const Algebra b2 = qxy("B2");
    const Algebra b3 = Algebra::free({"x", "y", "z"}, "B3");
    const Morphism i12(b1, b2, {b2.variable(0)});
    const Morphism i23(b2, b3, {b3.variable(0), b3.variable(1)});
    auto chain = ConnectingChain::from_steps(b1, {i12, i23});
    EXPECT_EQ(chain.map(1, 3)(b1.variable(0)), b3.variable(0));
    EXPECT_EQ(chain.map(2, 2), Morphism::identity(b2));
    const Morphism wrong13(b1, b3, {b3.variable(2)});
    EXPECT_EQ(code_of([&] { ConnectingChain({b1, b2, b3}, {{{1, 2}, i12}, {{2, 3}, i23}, {{1, 3}, wrong13}}); }),
              ErrorCode::chain_incompatible);
    EXPECT_EQ(code_of([&] { ConnectingChain::from_steps(b1, {i23}); }), ErrorCode::chain_incompatible);
}

TEST(Alpha1, MatchesComposedShape)
{
    const Algebra a = qx();
    const Algebra b2 = Algebra::quotient({"x"}, {Monomial::variable(0, 3)}, "B2");
    const Morphism p12(a, b2, {b2.variable(0)});
    const ClassicalSpec e(Morphism::identity(a), {{a.one()}, {pow(a.variable(0), 2)}}, "E");
    auto chain = ConnectingChain::from_steps(a, {p12});
    const DerivationSpec d = alpha1(e, chain);
    EXPECT_EQ(d.level0(1), Morphism::identity(a));
    EXPECT_EQ(d.level0(2), morphism_compose(p12, e.d0()));
    EXPECT_EQ(d.image(1, 0), a.one());
    EXPECT_EQ(d.image(2, 0), b2.variable(0) * b2.variable(0));
    EXPECT_TRUE(hs_verify(d, 100, 0).ok());
    EXPECT_EQ(code_of([&] { alpha1(e, ConnectingChain::from_steps(a, {})); }), ErrorCode::level_out_of_range);
}

// beta_j o alpha1 = phi_{1j}^* on random classical specs.
TEST(CommutingDiagram, BetaAfterAlphaIsPushforward)
{
    const Algebra a = qx();
    const Algebra b2 = qxy("B2");
    const Morphism i12(a, b2, {b2.variable(0)});
    auto chain = ConnectingChain::from_steps(a, {i12});
    Sampler rng(21);
    for (int s = 0; s < 10; ++s) {
        const ClassicalSpec e = random_classical(a, 2, rng);
        const DerivationSpec d = alpha1(e, chain);
        for (int j = 1; j <= 2; ++j)
            EXPECT_EQ(beta_j(d, chain, j), phi_push(e, chain.map(1, j), j));
    }
}

TEST(CommutingDiagram, NotStarredIsRejected)
{
    ProductExample ex;
    // Level-0 maps of a non-chain system: D0^2 = g2 is not diag o theta here.
    const Morphism skew(ex.b1, ex.b2, {make_pair(ex.b2, ex.b1.variable(0), ex.b1.zero()),
                                       make_pair(ex.b2, ex.b1.zero(), ex.b1.variable(1))});
    auto chain = ConnectingChain::from_steps(ex.b1, {skew});
    EXPECT_EQ(code_of([&] { beta_j(ex.spec, chain, 2); }), ErrorCode::not_starred);
    EXPECT_EQ(code_of([&] { beta_j(ex.spec, chain, 3); }), ErrorCode::level_out_of_range);
}

TEST(PhiPush, TruncatesAndComposes)
{
    const Algebra a = qx();
    const Algebra b = qxy();
    const Morphism incl(a, b, {b.variable(0)});
    const ClassicalSpec e(Morphism::identity(a), {{a.one()}, {a.variable(0)}, {a.zero()}});
    const ClassicalSpec p = phi_push(e, incl, 2);
    EXPECT_EQ(p.order(), 2);
    EXPECT_EQ(p.d0(), incl);
    EXPECT_EQ(p.image(2, 0), b.variable(0));
    EXPECT_TRUE(classical_verify(p, 50, 0).ok());
    EXPECT_EQ(code_of([&] { phi_push(e, incl, 4); }), ErrorCode::level_out_of_range);
}

namespace {

// A = Q[x], B2 = Q[x,y] with the inclusion, C2 = B2/<y>.
struct PushExample {
    Algebra a = qx();
    Algebra b2 = qxy("B2");
    Algebra c2 = Algebra::quotient({"x", "y"}, {Monomial::variable(1)}, "C2");
    Morphism id = Morphism::identity(a);
    Morphism incl{a, b2, {b2.variable(0)}};
    Morphism proj{b2, c2, {c2.variable(0), c2.variable(1)}};
    Morphism g2 = morphism_compose(proj, incl);
    SystemRef s = certify(StructureSystem(a, {a, b2}, {id, incl}, {BilinearMap{1, 1, {MulForm{b2.one(), incl, incl}}}}), 30, 0);
    SystemRef t = certify(StructureSystem(a, {a, c2}, {id, g2}, {BilinearMap{1, 1, {MulForm{c2.one(), g2, g2}}}}), 30, 0);
    DerivationSpec d{s, {id, incl}, {{a.one()}, {b2.variable(1)}}, "D"};
};

} // namespace

TEST(PsiPush, CommutesWithPsi)
{
    PushExample ex;
    const std::vector<Morphism> psis{ex.id, ex.proj};
    const DerivationSpec p = psi_push(ex.d, psis, ex.t, 100, 0);
    EXPECT_TRUE(hs_verify(p, 100, 0).ok());
    Sampler rng(12);
    for (int k = 0; k < 50; ++k) {
        const Element f = rng.element(ex.a, 4);
        for (int i = 1; i <= 2; ++i)
            EXPECT_EQ(hs_eval(p, i, f), psis[static_cast<std::size_t>(i - 1)](hs_eval(ex.d, i, f)));
    }
    // The y d/dx part dies in C2.
    EXPECT_EQ(hs_eval(p, 2, pow(ex.a.variable(0), 2)), ex.c2.one());
}

TEST(PsiPush, SquareViolationCarriesWitness)
{
    PushExample ex;
    const Morphism swap(ex.b2, ex.b2, {ex.b2.variable(1), ex.b2.variable(0)});
    try {
        psi_push(ex.d, {ex.id, swap}, ex.s, 50, 0);
        FAIL() << "expected SquareViolation";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::square_violation);
        EXPECT_NE(e.witness().find("psi(phi(b,b'))="), std::string::npos);
    }
    EXPECT_EQ(code_of([&] { psi_push(ex.d, {ex.id}, ex.s); }), ErrorCode::level_out_of_range);
    EXPECT_EQ(code_of([&] { psi_push(ex.d, {ex.id, ex.proj}, ex.s); }), ErrorCode::algebra_mismatch);
}

TEST(Witnesses, NonSurjectivityCertificates)
{
    auto a1 = witness_alpha1_not_surjective(50, 0);
    ASSERT_TRUE(a1.ok());
    EXPECT_EQ(a1.find("obstruction")->detail, "D2(x) = y uses y; y not in Q[x] = image(phi12)");
    auto b = witness_beta_not_surjective(50, 0);
    ASSERT_TRUE(b.ok());
    EXPECT_NE(b.find("obstruction")->detail.find("y in Q[x] = image(phi12)"), std::string::npos);
}
