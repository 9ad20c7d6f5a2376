#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tfim/lattice.hpp"

namespace tfim {

inline constexpr int kEdMaxSites = 12;  // dense 4096^2 eigendecomposition cap

/// (e^{-beta*b} - e^{-beta*a})/(a - b), the j = 0 time-integral kernel,
/// stable through the removable singularity at a = b.
inline double thermal_kernel0(double a, double b, double beta) {
    double d = a - b;
    if (std::abs(d) < 1e-12) return beta * std::exp(-beta * 0.5 * (a + b));
    double x = beta * d;
    return std::exp(-beta * b) * (-std::expm1(-x)) / d;
}

/// H = -lambda sum_{x~y} s3 s3 - delta sum_x s1 - nu sum_x s3 on <= 12 sites,
/// diagonalized densely; all thermal queries run over the full spectrum with
/// energies shifted by E_min for overflow safety.
class SpectralDecomposition {
  public:
    SpectralDecomposition(const TorusSpec& spec, double lambda, double delta, double nu = 0.0)
        : spec_(spec), lambda_(lambda), delta_(delta), nu_(nu) {
        if (spec.n_sites > kEdMaxSites)
            throw std::domain_error("exact diagonalization capped at 12 sites");
        const int n = spec.n_sites;
        dim_ = 1L << n;
        spin_.resize(dim_, std::vector<double>(n));
        for (long s = 0; s < dim_; ++s)
            for (int x = 0; x < n; ++x) spin_[s][x] = 1.0 - 2.0 * ((s >> x) & 1);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim_, dim_);
        auto edges = spec.edges();
        for (long s = 0; s < dim_; ++s) {
            double d = 0.0;
            for (auto [x, y] : edges) d -= lambda * spin_[s][x] * spin_[s][y];
            for (int x = 0; x < n; ++x) d -= nu * spin_[s][x];
            H(s, s) = d;
            for (int x = 0; x < n; ++x) H(s ^ (1L << x), s) -= delta;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
        if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
        evals_ = solver.eigenvalues();
        evecs_ = solver.eigenvectors();
        hamiltonian_ = std::move(H);
        sigma3_.resize(n);
    }

    const TorusSpec& spec() const { return spec_; }
    long dim() const { return dim_; }
    const Eigen::MatrixXd& hamiltonian() const { return hamiltonian_; }
    const Eigen::VectorXd& eigenvalues() const { return evals_; }
    const Eigen::MatrixXd& eigenvectors() const { return evecs_; }

    /// sigma^3_x rotated into the eigenbasis (cached).
    const Eigen::MatrixXd& sigma3(int x) const {
        spec_.check_site(x);
        if (sigma3_[x].size() == 0) {
            Eigen::VectorXd d(dim_);
            for (long s = 0; s < dim_; ++s) d(s) = spin_[s][x];
            sigma3_[x] = evecs_.transpose() * d.asDiagonal() * evecs_;
        }
        return sigma3_[x];
    }

    double partition(double beta) const {
        double e0 = evals_(0);
        double z = 0.0;
        for (long m = 0; m < dim_; ++m) z += std::exp(-beta * (evals_(m) - e0));
        return z;
    }

    /// tr(e^{-beta H} Q)/tr(e^{-beta H}) for Hermitian Q in the site basis.
    double thermal_expectation(double beta, const Eigen::MatrixXd& Q) const {
        if (Q.rows() != dim_ || Q.cols() != dim_) throw std::domain_error("dimension mismatch");
        double e0 = evals_(0);
        double z = 0.0, acc = 0.0;
        for (long m = 0; m < dim_; ++m) {
            double w = std::exp(-beta * (evals_(m) - e0));
            z += w;
            acc += w * evecs_.col(m).dot(Q * evecs_.col(m));
        }
        return acc / z;
    }

    /// Schwinger function c((0,0),(x,t)) = tr(e^{-(beta-t)H} s3_x e^{-tH} s3_0)/Z.
    double schwinger(double beta, int x, double t) const {
        if (!(t >= 0.0 && t < beta)) throw std::domain_error("time outside [0, beta)");
        const Eigen::MatrixXd& Sx = sigma3(x);
        const Eigen::MatrixXd& S0 = sigma3(0);
        double e0 = evals_(0);
        double acc = 0.0;
        for (long m = 0; m < dim_; ++m)
            for (long n = 0; n < dim_; ++n)
                acc += std::exp(-(beta - t) * (evals_(m) - e0)) *
                       std::exp(-t * (evals_(n) - e0)) * Sx(m, n) * S0(n, m);
        return acc / partition(beta);
    }

    /// Duhamel two-point function b(x) = int_0^beta c((0,0),(x,t)) dt.
    double duhamel(double beta, int x) const {
        const Eigen::MatrixXd& Sx = sigma3(x);
        const Eigen::MatrixXd& S0 = sigma3(0);
        double e0 = evals_(0);
        double acc = 0.0;
        for (long m = 0; m < dim_; ++m)
            for (long n = 0; n < dim_; ++n)
                acc += thermal_kernel0(evals_(m) - e0, evals_(n) - e0, beta) * Sx(m, n) * S0(n, m);
        return acc / partition(beta);
    }

    /// chat(k, l): Fourier transform of the Schwinger function over the full
    /// spectrum, l = 2*pi*j/beta.  Real and nonnegative up to roundoff; tiny
    /// negative values (> -1e-10) are clamped, anything worse throws.
    double chat(double beta, int kindex, int j) const {
        std::complex<double> v = chat_complex(beta, kindex, j);
        if (std::abs(v.imag()) > 1e-10) throw std::runtime_error("chat has imaginary residue");
        double re = v.real();
        if (re < -1e-10) throw std::runtime_error("chat negative beyond tolerance");
        return std::max(re, 0.0);
    }

    double susceptibility(double beta) const { return chat(beta, 0, 0); }

    /// chat(k, l) for l = 2*pi*j/beta, j = 0..jmax, reusing the rotated O_k.
    std::vector<double> chat_row(double beta, int kindex, int jmax) const {
        auto [Wre, Wim] = rotate_ok(kindex);
        double e0 = evals_(0);
        double z = partition(beta);
        std::vector<double> w(dim_);
        for (long m = 0; m < dim_; ++m) w[m] = std::exp(-beta * (evals_(m) - e0));
        std::vector<double> out(jmax + 1, 0.0);
        for (long m = 0; m < dim_; ++m)
            for (long n = 0; n < dim_; ++n) {
                double w2 = Wre(m, n) * Wre(m, n) + Wim(m, n) * Wim(m, n);
                if (w2 == 0.0) continue;
                double a = evals_(m) - e0, b = evals_(n) - e0;
                out[0] += w2 * thermal_kernel0(a, b, beta);
                double num = w[n] - w[m], d = a - b;
                for (int j = 1; j <= jmax; ++j) {
                    double l = 2.0 * std::numbers::pi * j / beta;
                    out[j] += w2 * num * d / (d * d + l * l);  // Re of num/(d+il)
                }
            }
        for (auto& v : out) v /= static_cast<double>(spec_.n_sites) * z;
        return out;
    }

    /// B = sum_x int_0^beta c(x,t)^2 dt via the closed-form double sum over
    /// eigenpair products.
    double bubble(double beta) const {
        double e0 = evals_(0);
        double z = partition(beta);
        std::vector<double> w(dim_);
        for (long m = 0; m < dim_; ++m) w[m] = std::exp(-beta * (evals_(m) - e0));
        double acc = 0.0;
        for (int x = 0; x < spec_.n_sites; ++x) {
            Eigen::MatrixXd A = sigma3(x).cwiseProduct(sigma3(0));  // A(m,n)=<m|sx|n><n|s0|m>
            for (long m = 0; m < dim_; ++m)
                for (long n = 0; n < dim_; ++n) {
                    double amn = A(m, n);
                    if (amn == 0.0) continue;
                    for (long p = 0; p < dim_; ++p) {
                        double wmp = w[m] * w[p];
                        double emp = evals_(m) + evals_(p) - 2 * e0;
                        for (long q = 0; q < dim_; ++q) {
                            double apq = A(p, q);
                            if (apq == 0.0) continue;
                            double d = emp - (evals_(n) + evals_(q) - 2 * e0);
                            double k = std::abs(d) < 1e-12 ? beta * wmp
                                                           : (w[n] * w[q] - wmp) / d;
                            acc += amn * apq * k;
                        }
                    }
                }
        }
        return acc / (z * z);
    }

  private:
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> rotate_ok(int kindex) const {
        Momentum k = momentum_at(spec_, kindex);
        const int n = spec_.n_sites;
        std::vector<std::complex<double>> site_phase(n);
        for (int x = 0; x < n; ++x) {
            double phase = 0.0;
            for (int a = 0; a < spec_.dim; ++a) phase += k.components[a] * spec_.coord(x, a);
            site_phase[x] = std::polar(1.0, phase);
        }
        Eigen::VectorXd ore(dim_), oim(dim_);
        for (long s = 0; s < dim_; ++s) {
            std::complex<double> tot = 0.0;
            for (int x = 0; x < n; ++x) tot += spin_[s][x] * site_phase[x];
            ore(s) = tot.real();
            oim(s) = tot.imag();
        }
        return {evecs_.transpose() * ore.asDiagonal() * evecs_,
                evecs_.transpose() * oim.asDiagonal() * evecs_};
    }

    std::complex<double> chat_complex(double beta, int kindex, int j) const {
        auto [Wre, Wim] = rotate_ok(kindex);
        double e0 = evals_(0);
        double l = 2.0 * std::numbers::pi * j / beta;
        std::complex<double> acc = 0.0;
        for (long m = 0; m < dim_; ++m)
            for (long nn = 0; nn < dim_; ++nn) {
                double w2 = Wre(m, nn) * Wre(m, nn) + Wim(m, nn) * Wim(m, nn);
                if (w2 == 0.0) continue;
                double a = evals_(m) - e0, b = evals_(nn) - e0;
                if (j == 0) {
                    acc += w2 * thermal_kernel0(a, b, beta);
                } else {
                    acc += w2 * (std::exp(-beta * b) - std::exp(-beta * a)) /
                           std::complex<double>(a - b, l);
                }
            }
        return acc / (static_cast<double>(spec_.n_sites) * partition(beta));
    }

    TorusSpec spec_;
    double lambda_, delta_, nu_;
    long dim_ = 0;
    Eigen::MatrixXd hamiltonian_;
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
    std::vector<std::vector<double>> spin_;
    mutable std::vector<Eigen::MatrixXd> sigma3_;
};

/// chi via the transverse-field derivative: central difference of the
/// per-site magnetization response d<s3_0>/dnu at nu = 0, computed from two
/// fresh diagonalizations at nu = +-eps.
inline double susceptibility_via_field(const TorusSpec& spec, double beta, double lambda,
                                       double delta, double eps = 1e-4) {
    auto magnetization = [&](double nu) {
        SpectralDecomposition sd(spec, lambda, delta, nu);
        double m = 0.0;
        double e0 = sd.eigenvalues()(0);
        double z = 0.0;
        std::vector<double> w(sd.dim());
        for (long i = 0; i < sd.dim(); ++i) {
            w[i] = std::exp(-beta * (sd.eigenvalues()(i) - e0));
            z += w[i];
        }
        for (int x = 0; x < spec.n_sites; ++x) {
            const Eigen::MatrixXd& S = sd.sigma3(x);
            for (long i = 0; i < sd.dim(); ++i) m += w[i] * S(i, i);
        }
        return m / (z * spec.n_sites);
    };
    return (magnetization(eps) - magnetization(-eps)) / (2 * eps);
}

struct ChiPartials {
    double dchi_dlambda = 0.0;
    double dchi_ddelta = 0.0;
    double err_dlambda = 0.0;  // Richardson error estimates
    double err_ddelta = 0.0;
};

/// Central differences of chi in lambda and delta with one Richardson halving.
inline ChiPartials chi_partials(const TorusSpec& spec, double beta, double lambda, double delta,
                                double step = 1e-3) {
    if (!(step > 0)) throw std::invalid_argument("step must be positive");
    if (lambda - step < 0 || delta - step <= 0)
        throw std::domain_error("parameter stepping leaves the domain");
    auto chi = [&](double l, double d) {
        return SpectralDecomposition(spec, l, d).susceptibility(beta);
    };
    auto richardson = [](double coarse, double fine) {
        double extrap = (4.0 * fine - coarse) / 3.0;
        return std::pair<double, double>(extrap, std::abs(extrap - fine));
    };
    double h = step;
    double dl_h = (chi(lambda + h, delta) - chi(lambda - h, delta)) / (2 * h);
    double dl_h2 = (chi(lambda + h / 2, delta) - chi(lambda - h / 2, delta)) / h;
    double dd_h = (chi(lambda, delta + h) - chi(lambda, delta - h)) / (2 * h);
    double dd_h2 = (chi(lambda, delta + h / 2) - chi(lambda, delta - h / 2)) / h;
    ChiPartials out;
    std::tie(out.dchi_dlambda, out.err_dlambda) = richardson(dl_h, dl_h2);
    std::tie(out.dchi_ddelta, out.err_ddelta) = richardson(dd_h, dd_h2);
    return out;
}

}  // namespace tfim
