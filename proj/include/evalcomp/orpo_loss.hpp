#pragma once

#include <vector>

namespace evalcomp {

// Reference math for the odds-ratio preference objective
//   L = L_sft + lambda * L_or,   L_or = -log sigmoid(log(odds_c / odds_r))
// so preference datasets and external trainers can be validated
// numerically. No model is trained here; L_sft enters as a scalar.

constexpr double kDefaultOrpoLambda = 0.1;
constexpr double kProbClamp = 1e-12;

enum class LengthNorm { mean, sum };

// P = exp(mean token log-prob) by default (length-normalized); `sum`
// gives the raw sequence probability instead.
struct SequenceLikelihood {
    std::vector<double> token_logprobs;  // each <= 0
    double probability = 0.0;            // in (0,1)

    static SequenceLikelihood from_logprobs(std::vector<double> logprobs,
                                            LengthNorm norm = LengthNorm::mean);
};

struct OrpoTerms {
    double l_sft = 0.0;
    double l_or = 0.0;
    double l_orpo = 0.0;
    double lambda = kDefaultOrpoLambda;
    double odds_chosen = 0.0;
    double odds_rejected = 0.0;
};

double odds(double p);  // p / (1 - p)

// -log sigmoid(log(odds(p_chosen) / odds(p_rejected))), evaluated via the
// stable log1p(exp(-z)) form. Inputs outside (0,1) raise DomainError;
// inside, they are clamped to [1e-12, 1 - 1e-12].
double or_loss(double p_chosen, double p_rejected);

OrpoTerms orpo_total(double l_sft, double p_chosen, double p_rejected,
                     double lambda = kDefaultOrpoLambda);

struct OrLossGrad {
    double d_p_chosen = 0.0;   // < 0
    double d_p_rejected = 0.0; // > 0
};

// Closed-form partials of or_loss, for gradient-checking trainers.
OrLossGrad or_loss_grad(double p_chosen, double p_rejected);

}  // namespace evalcomp
