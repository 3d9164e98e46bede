#pragma once

#include <vector>

namespace heraldkit {

/// Truncation of the photon-number ladder to levels 0..k_max.
///
/// tail_epsilon documents the tail-mass bound that was used to pick k_max
/// adaptively; it is carried along so downstream checks can test against the
/// same bound. k_max is clamped to [1, kHardCap].
struct FockCutoff {
    int k_max = 1;
    double tail_epsilon = 1e-12;

    static constexpr int kHardCap = 400;
    static constexpr double kDefaultTailEpsilon = 1e-12;

    /// Explicit truncation level.
    static FockCutoff fixed(int k_max, double tail_epsilon = kDefaultTailEpsilon);

    /// Smallest k_max with ratio^k_max < tail_epsilon (geometric coefficient
    /// decay with the given ratio in [0,1)), clamped to the hard cap.
    static FockCutoff for_geometric(double ratio, double tail_epsilon = kDefaultTailEpsilon);

    /// Cutoff for a twin-beam squeezing parameter lambda: the photon-number
    /// weights fall off as lambda^(2k), so this is for_geometric(lambda^2).
    static FockCutoff for_twin_beam(double lambda, double tail_epsilon = kDefaultTailEpsilon);

    /// Cutoff adequate for a coherent probe of mean photon number mu_max:
    /// smallest k_max whose Poisson tail bound is below tail_epsilon.
    static FockCutoff for_probe(double mu_max, double tail_epsilon = kDefaultTailEpsilon);

    int dim() const { return k_max + 1; }
};

/// Phase-insensitive operator diagonal in the photon-number basis.
///
/// With complement unset this is sum_k coeffs[k] |k><k|. With complement set
/// the represented operator is Identity - sum_k coeffs[k] |k><k|, which keeps
/// non-trace-class elements (e.g. the "click" element of an on/off detector)
/// exact instead of truncating the identity.
struct DiagonalFockOperator {
    std::vector<double> coeffs;
    bool complement = false;

    int k_max() const { return static_cast<int>(coeffs.size()) - 1; }

    /// Coefficient of |k><k| on the truncated space.
    double effective_coeff(int k) const {
        return complement ? 1.0 - coeffs[static_cast<std::size_t>(k)]
                          : coeffs[static_cast<std::size_t>(k)];
    }

    /// Projector |k><k| on a space of the given dimension.
    static DiagonalFockOperator fock_projector(int k, int dim);

    /// Diagonal density operator; throws std::invalid_argument unless the
    /// coefficients are nonnegative and sum to 1 within 1e-12.
    static DiagonalFockOperator density(std::vector<double> populations);

    /// True when complement is unset, all coefficients are nonnegative and
    /// they sum to 1 within 1e-12.
    bool is_density() const;
};

/// Total-variation distance 0.5 * sum_k |a_k - b_k| between two diagonal
/// densities of equal length.
double total_variation_distance(const DiagonalFockOperator& a, const DiagonalFockOperator& b);

/// Poisson photon-number weights e^(-mu) mu^k / k! for k = 0..k_max.
/// This is the number distribution of a coherent probe with |alpha|^2 = mu.
/// Throws std::domain_error for mu < 0 or mu large enough that e^(-mu)
/// underflows.
std::vector<double> poisson_weights(double mu, const FockCutoff& cutoff);

/// Upper bound mu^(k_max+1)/(k_max+1)! on the Poisson mass above k_max.
double poisson_tail_bound(double mu, int k_max);

/// Laguerre polynomial L_k(u) by the three-term recurrence
/// (k+1) L_{k+1} = (2k+1-u) L_k - k L_{k-1}.
double laguerre_eval(int k, double u);

/// Radial Wigner function of the Fock state |k><k| in dimensionless
/// quadratures: W_k(r) = (2/pi) (-1)^k e^(-2 r^2) L_k(4 r^2).
/// Normalized so the Wigner function integrates to 1 over the plane; the
/// vacuum peaks at 2/pi and the single photon dips to -2/pi at the origin.
double wigner_fock_radial(int k, double r);

/// Value of a diagonal operator's Wigner function at radius r, with a
/// precision flag for complement operators whose subtracted series has not
/// converged by the truncation level.
struct WignerValue {
    double value = 0.0;
    bool precision_warning = false;
};

/// Wigner function of a diagonal operator at radius r.
///
/// Explicit operators evaluate sum_k coeffs[k] W_k(r). Complement operators
/// evaluate 1/pi - sum_k coeffs[k] W_k(r), where 1/pi is the flat Wigner
/// density of the identity (the Abel limit of the alternating Fock series).
/// The subtraction is only accurate when the stored coefficients have decayed
/// by k_max; otherwise precision_warning is set.
WignerValue wigner_diagonal(const DiagonalFockOperator& op, double r);

}  // namespace heraldkit
