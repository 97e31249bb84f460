#include "evalcomp/orpo_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evalcomp/errors.hpp"

namespace evalcomp {

SequenceLikelihood SequenceLikelihood::from_logprobs(std::vector<double> logprobs, LengthNorm norm) {
    if (logprobs.empty()) throw DomainError("sequence likelihood needs at least one token log-prob");
    for (double lp : logprobs)
        if (lp > 0.0) throw DomainError("token log-prob must be <= 0, got " + std::to_string(lp));
    double total = std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
    double exponent = norm == LengthNorm::mean ? total / static_cast<double>(logprobs.size()) : total;
    SequenceLikelihood out;
    out.token_logprobs = std::move(logprobs);
    out.probability = std::clamp(std::exp(exponent), kProbClamp, 1.0 - kProbClamp);
    return out;
}

namespace {

double checked_clamp(double p, const char* name) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError(std::string(name) + " must lie in (0,1), got " + std::to_string(p));
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double logit(double p) {
    return std::log(p) - std::log1p(-p);
}

}  // namespace

double odds(double p) {
    return p / (1.0 - p);
}

double or_loss(double p_chosen, double p_rejected) {
    const double pc = checked_clamp(p_chosen, "p_chosen");
    const double pr = checked_clamp(p_rejected, "p_rejected");
    const double z = logit(pc) - logit(pr);  // log(odds_c / odds_r)
    // -log sigmoid(z) = log(1 + exp(-z)), kept stable on both tails.
    if (z >= 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

OrpoTerms orpo_total(double l_sft, double p_chosen, double p_rejected, double lambda) {
    if (l_sft < 0.0) throw DomainError("l_sft must be >= 0");
    if (lambda < 0.0) throw DomainError("lambda must be >= 0");
    OrpoTerms terms;
    terms.l_sft = l_sft;
    terms.lambda = lambda;
    terms.l_or = or_loss(p_chosen, p_rejected);
    terms.l_orpo = l_sft + lambda * terms.l_or;
    terms.odds_chosen = odds(std::clamp(p_chosen, kProbClamp, 1.0 - kProbClamp));
    terms.odds_rejected = odds(std::clamp(p_rejected, kProbClamp, 1.0 - kProbClamp));
    return terms;
}

OrLossGrad or_loss_grad(double p_chosen, double p_rejected) {
    const double pc = checked_clamp(p_chosen, "p_chosen");
    const double pr = checked_clamp(p_rejected, "p_rejected");
    const double z = logit(pc) - logit(pr);
    // 1 - sigmoid(z), stable for large |z|.
    const double one_minus_sigma = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z))
                                            : 1.0 / (1.0 + std::exp(z));
    OrLossGrad grad;
    grad.d_p_chosen = -one_minus_sigma / (pc * (1.0 - pc));
    grad.d_p_rejected = one_minus_sigma / (pr * (1.0 - pr));
    return grad;
}

}  // namespace evalcomp
