#pragma once

// Steady-state transform algebra of the multi-source M/G/1 queue whose server
// fails (rate alpha) only while serving and repairs with preemptive resume.
//
// A packet's completion time H is its service time inflated by every repair
// that interrupts it; H has LST S*(h(a)) with the breakdown kernel
// h(a) = a + alpha (1 - R*(a)). With H in hand the system is an ordinary
// FCFS M/G/1 queue fed by the superposition of all sources.

#include <cmath>
#include <limits>

#include "aoiq/dists.hpp"
#include "aoiq/error.hpp"
#include "aoiq/params.hpp"

namespace aoiq {

struct CompletionMoments {
    double eH = 0.0;   // E[H]
    double eH2 = 0.0;  // E[H^2]
    double eH3 = 0.0;  // E[H^3]
    double rho = 0.0;  // total load lambda * E[H]
    bool stable = false;
};

inline constexpr double kStabilityMargin = 1e-9;
inline constexpr double kLstSeriesCutoff = 1e-8;
inline constexpr double kDerivSeriesCutoff = 1e-5;
inline constexpr double kPgfSeriesCutoff = 1e-8;

class UnreliableQueue {
public:
    explicit UnreliableQueue(const SystemParams& params)
        : service_(params.service), repair_(params.repair), alpha_(params.alpha) {
        params.validate();
        if (!params.homogeneous())
            throw InvalidParameter(
                "analytic model requires identical service and repair laws for all sources");
        lambda_ = params.total_lambda();
        b1_ = moment(service_, 1);
        b2_ = moment(service_, 2);
        b3_ = moment(service_, 3);
        g1_ = moment(repair_, 1);
        g2_ = moment(repair_, 2);
        g3_ = moment(repair_, 3);

        // Conditioned on S = s the repair total is compound Poisson with
        // rate alpha*s, whose cumulants are alpha*s*gamma_n.
        const double inflate = 1.0 + alpha_ * g1_;
        m_.eH = b1_ * inflate;
        m_.eH2 = b2_ * inflate * inflate + b1_ * alpha_ * g2_;
        m_.eH3 = b3_ * inflate * inflate * inflate + 3.0 * b2_ * inflate * alpha_ * g2_ +
                 b1_ * alpha_ * g3_;
        m_.rho = lambda_ * m_.eH;
        m_.stable = m_.rho < 1.0 - kStabilityMargin;
    }

    double lambda() const { return lambda_; }
    double alpha() const { return alpha_; }
    const Distribution& service() const { return service_; }
    const Distribution& repair() const { return repair_; }
    const CompletionMoments& moments() const { return m_; }
    double rho() const { return m_.rho; }
    bool stable() const { return m_.stable; }

    void require_stable() const {
        if (!m_.stable) throw Unstable(m_.rho);
    }

    // h(a) = a + alpha (1 - R*(a)) and its first two derivatives.
    double kernel(double a) const {
        if (!(a >= 0.0)) throw DomainError("kernel argument must be >= 0");
        return a + alpha_ * lst_complement(repair_, a);
    }
    double kernel_d1(double a) const { return 1.0 - alpha_ * lst_deriv(repair_, a, 1); }
    double kernel_d2(double a) const { return -alpha_ * lst_deriv(repair_, a, 2); }

    // LST of the completion time H and its derivatives (chain rule).
    double completion_lst(double a) const { return lst(service_, kernel(a)); }
    double completion_complement(double a) const { return lst_complement(service_, kernel(a)); }
    double completion_lst_d1(double a) const {
        return lst_deriv(service_, kernel(a), 1) * kernel_d1(a);
    }
    double completion_lst_d2(double a) const {
        const double h = kernel(a);
        const double k1 = kernel_d1(a);
        return lst_deriv(service_, h, 2) * k1 * k1 + lst_deriv(service_, h, 1) * kernel_d2(a);
    }

    double idle_prob() const {
        require_stable();
        return 1.0 - m_.rho;
    }

    /// Long-run fraction of time the server is not under repair.
    double availability() const {
        require_stable();
        return 1.0 - lambda_ * b1_ * alpha_ * g1_;
    }

    /// Pollaczek-Khinchine mean queueing delay with completion time H.
    double mean_waiting() const {
        require_stable();
        return lambda_ * m_.eH2 / (2.0 * (1.0 - m_.rho));
    }
    double mean_sojourn() const { return mean_waiting() + m_.eH; }
    double mean_system_size() const { return lambda_ * mean_sojourn(); }
    double mean_queue_size() const { return lambda_ * mean_waiting(); }

    /// E[T^2] via the Takacs recursion for the second waiting-time moment.
    double sojourn_moment2() const {
        const double w1 = mean_waiting();
        const double w2 = 2.0 * w1 * w1 + lambda_ * m_.eH3 / (3.0 * (1.0 - m_.rho));
        return w2 + 2.0 * w1 * m_.eH + m_.eH2;
    }

    /// Sojourn-time LST W*(a) = a H*(a) p0 / (a - lambda (1 - H*(a))).
    double sojourn_lst(double a) const {
        require_stable();
        if (!(a >= 0.0)) throw DomainError("sojourn LST argument must be >= 0");
        if (a <= kLstSeriesCutoff) return 1.0 - mean_sojourn() * a;
        const double hs = completion_lst(a);
        return a * hs * idle_prob() / (a - lambda_ * completion_complement(a));
    }

    /// First or second derivative of W*(a) for a > 0.
    double sojourn_lst_deriv(double a, int order) const {
        require_stable();
        if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
        if (!(a >= 0.0)) throw DomainError("sojourn LST argument must be >= 0");
        if (a <= kDerivSeriesCutoff) {
            // W*(a) = 1 - E[T] a + E[T^2] a^2/2 - ...; the a^2 term of W*'
            // and the a term of W*'' are below 1e-5 relative here.
            const double t1 = mean_sojourn();
            const double t2 = sojourn_moment2();
            return order == 1 ? -t1 + t2 * a : t2;
        }
        const double p0 = idle_prob();
        const double hs = completion_lst(a);
        const double hs1 = completion_lst_d1(a);
        const double hs2 = completion_lst_d2(a);
        const double num = a * hs;
        const double num1 = hs + a * hs1;
        const double num2 = 2.0 * hs1 + a * hs2;
        const double den = a - lambda_ * completion_complement(a);
        const double den1 = 1.0 + lambda_ * hs1;
        const double den2 = lambda_ * hs2;
        const double q1 = (num1 * den - num * den1) / (den * den);
        if (order == 1) return p0 * q1;
        const double q2 = (num2 * den - num * den2) / (den * den) - 2.0 * den1 * q1 / den;
        return p0 * q2;
    }

    /// pgf of the number of waiting packets (excluding the one at the server).
    /// The removable singularity at z = 1 is handled by its first-order series.
    double pgf_queue(double z) const {
        require_stable();
        if (!(z >= 0.0 && z <= 1.0)) throw DomainError("pgf argument must lie in [0,1]");
        if (1.0 - z <= kPgfSeriesCutoff) return 1.0 - mean_queue_size() * (1.0 - z);
        const double hs = completion_lst(lambda_ * (1.0 - z));
        return idle_prob() * (1.0 - z) / (hs - z);
    }

    /// pgf of the number of packets in the system.
    double pgf_system(double z) const {
        require_stable();
        if (!(z >= 0.0 && z <= 1.0)) throw DomainError("pgf argument must lie in [0,1]");
        if (1.0 - z <= kPgfSeriesCutoff) return 1.0 - mean_system_size() * (1.0 - z);
        const double hs = completion_lst(lambda_ * (1.0 - z));
        return hs * (1.0 - z) * idle_prob() / (hs - z);
    }

private:
    Distribution service_;
    Distribution repair_;
    double alpha_;
    double lambda_ = 0.0;
    double b1_ = 0.0, b2_ = 0.0, b3_ = 0.0;
    double g1_ = 0.0, g2_ = 0.0, g3_ = 0.0;
    CompletionMoments m_;
};

// Free-function surface over UnreliableQueue.

inline double breakdown_kernel(const SystemParams& p, double a) {
    return UnreliableQueue(p).kernel(a);
}
inline CompletionMoments completion_moments(const SystemParams& p) {
    return UnreliableQueue(p).moments();
}
inline double idle_prob(const SystemParams& p) { return UnreliableQueue(p).idle_prob(); }
inline double availability(const SystemParams& p) { return UnreliableQueue(p).availability(); }
inline double sojourn_lst(const SystemParams& p, double a) {
    return UnreliableQueue(p).sojourn_lst(a);
}
inline double sojourn_lst_deriv(const SystemParams& p, double a, int order) {
    return UnreliableQueue(p).sojourn_lst_deriv(a, order);
}
inline double pgf_queue(const SystemParams& p, double z) { return UnreliableQueue(p).pgf_queue(z); }
inline double pgf_system(const SystemParams& p, double z) {
    return UnreliableQueue(p).pgf_system(z);
}
inline double mean_waiting(const SystemParams& p) { return UnreliableQueue(p).mean_waiting(); }
inline double mean_sojourn(const SystemParams& p) { return UnreliableQueue(p).mean_sojourn(); }
inline double mean_system_size(const SystemParams& p) {
    return UnreliableQueue(p).mean_system_size();
}

}  // namespace aoiq
