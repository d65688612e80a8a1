#include "collective/differentiation.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace collective {

namespace {

struct Design {
    Eigen::VectorXd y;
    Eigen::MatrixXd z;                 // n x q, columns grouped by term
    std::vector<std::size_t> term_of;  // term index of each z column
    int terms = 0;
    // cross-products, so a deviance evaluation costs O(q^3) instead of O(n q^2)
    Eigen::MatrixXd ztz;
    Eigen::VectorXd zty;
    Eigen::VectorXd zt1;
    double yty = 0.0;
    double sum_y = 0.0;
};

int term_count(LmmModel model)
{
    return static_cast<int>(model) + 1;
}

void check_input(const DeviationMatrix& devs)
{
    if (devs.agents() < 2) {
        throw std::invalid_argument("mixed model needs at least two agents");
    }
    if (devs.rounds() < 3) {
        throw std::invalid_argument("mixed model needs at least three rounds");
    }
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        for (double v : devs.row(i)) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("non-finite deviation");
            }
        }
    }
}

Design build_design(const DeviationMatrix& devs, LmmModel model)
{
    const std::size_t N = devs.agents();
    const std::size_t T = devs.rounds();
    const std::size_t n = N * T;

    // standardized round index
    std::vector<double> s(T);
    const double mean = static_cast<double>(T - 1) / 2.0;
    double ss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        ss += (static_cast<double>(t) - mean) * (static_cast<double>(t) - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(T - 1));
    for (std::size_t t = 0; t < T; ++t) {
        s[t] = (static_cast<double>(t) - mean) / sd;
    }

    Design d;
    d.terms = term_count(model);
    std::size_t q = T;
    if (d.terms >= 2) {
        q += N;
    }
    if (d.terms >= 3) {
        q += N;
    }
    d.y.resize(static_cast<Eigen::Index>(n));
    d.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    d.term_of.assign(q, 0);
    for (std::size_t c = T; c < q; ++c) {
        d.term_of[c] = c < T + N ? 1 : 2;
    }
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t t = 0; t < T; ++t) {
            const auto r = static_cast<Eigen::Index>(i * T + t);
            d.y(r) = devs.at(i, t);
            d.z(r, static_cast<Eigen::Index>(t)) = 1.0;
            if (d.terms >= 2) {
                d.z(r, static_cast<Eigen::Index>(T + i)) = 1.0;
            }
            if (d.terms >= 3) {
                d.z(r, static_cast<Eigen::Index>(T + N + i)) = s[t];
            }
        }
    }
    d.ztz = d.z.transpose() * d.z;
    d.zty = d.z.transpose() * d.y;
    d.zt1 = d.z.transpose() * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    d.yty = d.y.squaredNorm();
    d.sum_y = d.y.sum();
    return d;
}

struct PlsSolution {
    double deviance = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
};

// Penalized least squares at relative sds theta (lme4 profiled ML deviance).
PlsSolution solve_pls(const Design& d, const std::vector<double>& theta)
{
    const Eigen::Index n = d.y.size();
    const Eigen::Index q = d.z.cols();
    Eigen::VectorXd lambda(q);
    for (Eigen::Index c = 0; c < q; ++c) {
        lambda(c) = std::abs(theta[d.term_of[static_cast<std::size_t>(c)]]);
    }
    Eigen::MatrixXd a = lambda.asDiagonal() * d.ztz * lambda.asDiagonal();
    a.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> chol(a);
    double logdet = 0.0;
    for (Eigen::Index k = 0; k < q; ++k) {
        logdet += 2.0 * std::log(chol.matrixL()(k, k));
    }

    // Profile out u, then beta: the intercept fit is on W-residualized data.
    const Eigen::VectorXd wty = lambda.cwiseProduct(d.zty);
    const Eigen::VectorXd wt1 = lambda.cwiseProduct(d.zt1);
    const Eigen::VectorXd a_y = chol.solve(wty);
    const Eigen::VectorXd a_1 = chol.solve(wt1);
    const double nd = static_cast<double>(n);
    const double xx = nd - wt1.dot(a_1);
    const double xy = d.sum_y - wt1.dot(a_y);
    const double beta = xy / xx;
    // ||y - beta 1||^2 minus what the penalized random effects explain
    const double r2 = d.yty - 2.0 * beta * d.sum_y + beta * beta * nd - (wty - beta * wt1).dot(a_y - beta * a_1);

    PlsSolution out;
    out.beta = beta;
    out.r2 = r2;
    out.deviance = logdet + nd * (1.0 + std::log(2.0 * std::numbers::pi * r2 / nd));
    return out;
}

struct Objective {
    const Design* design;
};

double gsl_objective(const gsl_vector* v, void* params)
{
    const auto* obj = static_cast<const Objective*>(params);
    std::vector<double> theta(v->size);
    for (std::size_t k = 0; k < v->size; ++k) {
        theta[k] = gsl_vector_get(v, k);
    }
    const double dev = solve_pls(*obj->design, theta).deviance;
    return std::isfinite(dev) ? dev : std::numeric_limits<double>::max();
}

struct Minimum {
    std::vector<double> theta;
    double deviance = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

Minimum nelder_mead(const Design& d, const std::vector<double>& start, const LmmOptions& options)
{
    gsl_set_error_handler_off();
    const std::size_t dim = start.size();
    Objective obj{&d};
    gsl_multimin_function fn{&gsl_objective, dim, &obj};

    gsl_vector* x = gsl_vector_alloc(dim);
    gsl_vector* step = gsl_vector_alloc(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        gsl_vector_set(x, k, start[k]);
        gsl_vector_set(step, k, std::max(0.25, 0.5 * std::abs(start[k])));
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    gsl_multimin_fminimizer_set(s, &fn, x, step);

    Minimum m;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && m.iterations < options.max_iterations) {
        ++m.iterations;
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) {
            break;
        }
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), options.tolerance);
    }
    m.converged = status == GSL_SUCCESS;
    m.deviance = s->fval;
    m.theta.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        m.theta[k] = std::abs(gsl_vector_get(s->x, k));
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return m;
}

LmmFit finish(const Design& d, LmmModel model, const Minimum& best)
{
    const PlsSolution sol = solve_pls(d, best.theta);
    const double sigma2 = sol.r2 / static_cast<double>(d.y.size());
    static const char* const names[] = {"time_intercept", "agent_intercept", "agent_slope"};

    LmmFit fit;
    fit.model = model;
    fit.loglik = -sol.deviance / 2.0;
    fit.fixed_intercept = sol.beta;
    fit.theta = best.theta;
    fit.converged = best.converged;
    fit.iterations = best.iterations;
    fit.variance_components["residual"] = sigma2;
    for (std::size_t k = 0; k < best.theta.size(); ++k) {
        fit.variance_components[names[k]] = sigma2 * best.theta[k] * best.theta[k];
    }
    return fit;
}

}  // namespace

std::string_view to_string(LmmModel model)
{
    switch (model) {
    case LmmModel::M0:
        return "m0";
    case LmmModel::M1:
        return "m1";
    case LmmModel::M2:
        return "m2";
    }
    return "?";
}

bool lacks_within_round_variation(const DeviationMatrix& devs)
{
    double scale = 0.0;
    for (std::size_t i = 0; i < devs.agents(); ++i) {
        for (double v : devs.row(i)) {
            scale = std::max(scale, std::abs(v));
        }
    }
    const double tol = 1e-12 * std::max(1.0, scale);
    for (std::size_t t = 0; t < devs.rounds(); ++t) {
        for (std::size_t i = 1; i < devs.agents(); ++i) {
            if (std::abs(devs.at(i, t) - devs.at(0, t)) > tol) {
                return false;
            }
        }
    }
    return true;
}

double lmm_deviance(const DeviationMatrix& devs, LmmModel model, const std::vector<double>& theta)
{
    check_input(devs);
    if (theta.size() != static_cast<std::size_t>(term_count(model))) {
        throw std::invalid_argument("theta has wrong length for model");
    }
    return solve_pls(build_design(devs, model), theta).deviance;
}

LmmFit fit_lmm(const DeviationMatrix& devs, LmmModel model, const std::vector<double>& start, const LmmOptions& options)
{
    check_input(devs);
    if (lacks_within_round_variation(devs)) {
        throw std::domain_error("no variation within rounds; mixed model is degenerate");
    }
    const Design d = build_design(devs, model);
    const auto dim = static_cast<std::size_t>(d.terms);

    std::vector<std::vector<double>> starts;
    starts.emplace_back(dim, 1.0);
    starts.emplace_back(dim, 0.3);
    if (!start.empty()) {
        std::vector<double> s = start;
        s.resize(dim, 0.0);
        starts.push_back(s);
        // the nested optimum with the new term nudged away from zero
        for (std::size_t k = start.size(); k < dim; ++k) {
            s[k] = 0.5;
        }
        starts.push_back(s);
    }

    Minimum best;
    for (const auto& s : starts) {
        Minimum m = nelder_mead(d, s, options);
        // one restart from the reported optimum guards against simplex collapse
        if (m.converged) {
            Minimum again = nelder_mead(d, m.theta, options);
            if (again.deviance <= m.deviance) {
                again.iterations += m.iterations;
                m = again;
            }
        }
        if (m.deviance < best.deviance) {
            best = m;
        }
    }
    // evaluate the nested start exactly too (never worse than the smaller model)
    if (!start.empty()) {
        std::vector<double> s = start;
        s.resize(dim, 0.0);
        const double dev = solve_pls(d, s).deviance;
        if (dev < best.deviance) {
            best.theta = s;
            best.deviance = dev;
        }
    }
    return finish(d, model, best);
}

LmmFit fit_lmm(const DeviationMatrix& devs, LmmModel model, const LmmOptions& options)
{
    return fit_lmm(devs, model, std::vector<double>{}, options);
}

TestResult lrt(const LmmFit& small, const LmmFit& big)
{
    const int df = static_cast<int>(big.model) - static_cast<int>(small.model);
    if (df <= 0) {
        throw std::invalid_argument("likelihood ratio test needs nested models (small before big)");
    }
    if (!std::isfinite(small.loglik) || !std::isfinite(big.loglik)) {
        throw std::domain_error("likelihood ratio test on non-finite log-likelihood");
    }
    TestResult r;
    r.statistic = std::max(0.0, 2.0 * (big.loglik - small.loglik));
    r.df = df;
    r.p_value = r.statistic == 0.0 ? 1.0 : chi_square_sf(r.statistic, df);
    r.alternative = Alternative::Greater;
    return r;
}

DiffTestResult differentiation_test(const DeviationMatrix& devs, double alpha, const LmmOptions& options)
{
    check_input(devs);
    DiffTestResult out;
    if (lacks_within_round_variation(devs)) {
        out.degenerate = true;
        return out;
    }
    const LmmFit m0 = fit_lmm(devs, LmmModel::M0, options);
    const LmmFit m1 = fit_lmm(devs, LmmModel::M1, m0.theta, options);
    const LmmFit m2 = fit_lmm(devs, LmmModel::M2, m1.theta, options);
    out.p_intercept = lrt(m0, m1).p_value;
    out.p_slope = lrt(m1, m2).p_value;
    out.flagged = out.p_intercept < alpha || out.p_slope < alpha;
    return out;
}

}  // namespace collective
