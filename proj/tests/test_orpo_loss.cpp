#include <doctest.h>

#include <cmath>

#include "evalcomp/errors.hpp"
#include "evalcomp/orpo_loss.hpp"
#include "evalcomp/rng.hpp"

using namespace evalcomp;

TEST_CASE("or_loss at equal probabilities is exactly ln 2") {
    for (double p : {0.1, 0.25, 0.5, 0.9, 0.999}) {
        CHECK(std::abs(or_loss(p, p) - std::log(2.0)) < 1e-12);
    }
}

TEST_CASE("or_loss closed-form spot values") {
    // odds(0.75)/odds(0.25) = 9, sigmoid(ln 9) = 0.9, -ln 0.9 = ln(10/9)
    CHECK(std::abs(or_loss(0.75, 0.25) - std::log(10.0 / 9.0)) < 1e-12);
    // the symmetric penalty: sigmoid(ln(1/9)) = 0.1
    CHECK(std::abs(or_loss(0.25, 0.75) - std::log(10.0)) < 1e-12);
}

TEST_CASE("or_loss rejects probabilities outside (0,1)") {
    CHECK_THROWS_AS(or_loss(0.0, 0.5), DomainError);
    CHECK_THROWS_AS(or_loss(0.5, 1.0), DomainError);
    CHECK_THROWS_AS(or_loss(-0.1, 0.5), DomainError);
    CHECK_THROWS_AS(or_loss(0.5, 1.5), DomainError);
}

TEST_CASE("or_loss is finite across the clamped domain") {
    for (double pc : {1e-12, 1e-9, 0.5, 1.0 - 1e-9, 1.0 - 1e-12}) {
        for (double pr : {1e-12, 0.5, 1.0 - 1e-12}) {
            const double v = or_loss(pc, pr);
            CHECK(std::isfinite(v));
            CHECK(v > 0.0);
        }
    }
}

TEST_CASE("or_loss is monotone: decreasing in p_chosen, increasing in p_rejected") {
    double prev = or_loss(0.01, 0.5);
    for (double pc = 0.02; pc < 1.0 - 1e-6; pc += 0.01) {
        const double now = or_loss(pc, 0.5);
        CHECK(now < prev);
        prev = now;
    }
    prev = or_loss(0.5, 0.01);
    for (double pr = 0.02; pr < 1.0 - 1e-6; pr += 0.01) {
        const double now = or_loss(0.5, pr);
        CHECK(now > prev);
        prev = now;
    }
}

TEST_CASE("orpo_total composes the terms") {
    OrpoTerms zero_lambda = orpo_total(3.0, 0.8, 0.2, 0.0);
    CHECK(zero_lambda.l_orpo == 3.0);

    OrpoTerms spec = orpo_total(2.0, 0.75, 0.25, 0.1);
    CHECK(std::abs(spec.l_orpo - (2.0 + 0.1 * std::log(10.0 / 9.0))) < 1e-12);
    CHECK(std::abs(spec.l_orpo - 2.0105360) < 1e-6);
    CHECK(spec.odds_chosen == doctest::Approx(3.0));
    CHECK(spec.odds_rejected == doctest::Approx(1.0 / 3.0));
    CHECK(spec.l_orpo == spec.l_sft + spec.lambda * spec.l_or);

    OrpoTerms defaulted = orpo_total(1.0, 0.6, 0.4);
    CHECK(defaulted.lambda == 0.1);

    CHECK_THROWS_AS(orpo_total(-1.0, 0.5, 0.5), DomainError);
    CHECK_THROWS_AS(orpo_total(1.0, 0.5, 0.5, -0.1), DomainError);
}

TEST_CASE("gradient at the symmetric point is (-2, +2)") {
    OrLossGrad g = or_loss_grad(0.5, 0.5);
    CHECK(g.d_p_chosen == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(g.d_p_rejected == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gradient signs are fixed everywhere") {
    Rng rng(31337);
    for (int i = 0; i < 200; ++i) {
        const double pc = 0.01 + 0.98 * rng.uniform();
        const double pr = 0.01 + 0.98 * rng.uniform();
        OrLossGrad g = or_loss_grad(pc, pr);
        CHECK(g.d_p_chosen < 0.0);
        CHECK(g.d_p_rejected > 0.0);
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(20240202);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const double pc = 0.01 + 0.98 * rng.uniform();
        const double pr = 0.01 + 0.98 * rng.uniform();
        OrLossGrad g = or_loss_grad(pc, pr);
        const double fd_pc = (or_loss(pc + h, pr) - or_loss(pc - h, pr)) / (2 * h);
        const double fd_pr = (or_loss(pc, pr + h) - or_loss(pc, pr - h)) / (2 * h);
        CHECK(std::abs(g.d_p_chosen - fd_pc) / std::abs(fd_pc) < 1e-6);
        CHECK(std::abs(g.d_p_rejected - fd_pr) / std::abs(fd_pr) < 1e-6);
    }
}

TEST_CASE("sequence likelihood is exp of the mean token log-prob") {
    SequenceLikelihood mean = SequenceLikelihood::from_logprobs({-0.5, -1.5});
    CHECK(mean.probability == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    SequenceLikelihood raw = SequenceLikelihood::from_logprobs({-0.5, -1.5}, LengthNorm::sum);
    CHECK(raw.probability == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

    // Long sequences stay in (0,1) instead of underflowing to 0.
    std::vector<double> long_seq(5000, -3.0);
    SequenceLikelihood clamped = SequenceLikelihood::from_logprobs(long_seq, LengthNorm::sum);
    CHECK(clamped.probability >= kProbClamp);

    CHECK_THROWS_AS(SequenceLikelihood::from_logprobs({}), DomainError);
    CHECK_THROWS_AS(SequenceLikelihood::from_logprobs({0.5}), DomainError);
}

TEST_CASE("odds helper") {
    CHECK(odds(0.75) == doctest::Approx(3.0));
    CHECK(odds(0.5) == doctest::Approx(1.0));
}
