#pragma once

/**
 * @file integrand.hpp
 * @brief Adapted integrands sampled on an event-refined grid.
 *
 * An integrand is a deterministic function of the path history. Evaluators
 * only ever see a History view cut at the evaluation node, which is how
 * adaptedness is enforced: asking for data past the cut throws.
 *
 * Two families share one evaluator type:
 *  - simple: X = X_0·1_{0} + Σ X_i·1_{(t_i, t_{i+1}]}, with X_i evaluated
 *    from the history up to t_i; breakpoints must be grid nodes;
 *  - grid: X evaluated at the left end of every grid cell.
 */

#include "itolevy/error.hpp"
#include "itolevy/process.hpp"
#include "itolevy/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace itolevy::integrator {

using space::HSOperator;
using space::HVector;
using space::Matrix;
using space::SeqH;
using space::Vector;

/// Read-only view of a path restricted to nodes 0..cutoff.
class History {
public:
    History(const process::SamplePath& driver, std::size_t cutoff, const process::LevyPath* levy = nullptr)
        : driver_(&driver)
        , levy_(levy)
        , cutoff_(cutoff)
    {
    }

    std::size_t node() const { return cutoff_; }
    double time() const { return driver_->grid().times[cutoff_]; }
    double horizon() const { return driver_->grid().horizon(); }
    std::size_t components() const { return driver_->components(); }

    double driver(std::size_t j) const { return driver_->value(j, cutoff_); }
    double driver_at(std::size_t j, std::size_t node) const
    {
        check(node);
        return driver_->value(j, node);
    }
    double time_at(std::size_t node) const
    {
        check(node);
        return driver_->grid().times[node];
    }

    bool has_levy() const { return levy_ != nullptr; }
    /// L at the cut, in reference coordinates of U.
    Vector levy() const { return levy_at(cutoff_); }
    Vector levy_at(std::size_t node) const
    {
        require(levy_ != nullptr, ErrorCode::InvalidArgument, "integrand needs a U-valued path");
        check(node);
        return levy_->value(node);
    }
    const space::CovarianceSpec& spec() const
    {
        require(levy_ != nullptr, ErrorCode::InvalidArgument, "integrand needs a U-valued path");
        return levy_->spec();
    }

private:
    void check(std::size_t node) const
    {
        require(node <= cutoff_, ErrorCode::IndexOutOfRange, "integrand looked ahead of its evaluation time");
    }

    const process::SamplePath* driver_;
    const process::LevyPath* levy_;
    std::size_t cutoff_;
};

enum class Sampling {
    LeftPoint,
    /// Fault injection: evaluates with the history up to the right end of
    /// the cell, which breaks predictability.
    RightPointFault,
};

template <class V>
class Integrand {
public:
    using Evaluator = std::function<V(const History&)>;

    struct Step {
        std::size_t from; // node of t_i
        std::size_t to;   // node of t_{i+1}
        V value;
    };

    static Integrand grid(Evaluator evaluator)
    {
        Integrand x;
        x.evaluator_ = std::make_shared<Evaluator>(std::move(evaluator));
        return x;
    }

    static Integrand simple(std::vector<double> breakpoints, Evaluator evaluator)
    {
        require(breakpoints.size() >= 2, ErrorCode::InvalidArgument, "a simple integrand needs two breakpoints");
        require(breakpoints.front() == 0.0, ErrorCode::InvalidArgument, "breakpoints must start at 0");
        for (std::size_t i = 1; i < breakpoints.size(); ++i) {
            require(breakpoints[i] > breakpoints[i - 1], ErrorCode::InvalidArgument,
                    "breakpoints must increase strictly");
        }
        Integrand x = grid(std::move(evaluator));
        x.breakpoints_ = std::move(breakpoints);
        return x;
    }

    static Integrand constant(V value)
    {
        return grid([value = std::move(value)](const History&) { return value; });
    }

    Integrand with_sampling(Sampling sampling) const
    {
        Integrand x = *this;
        x.sampling_ = sampling;
        return x;
    }

    bool is_simple() const { return !breakpoints_.empty(); }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    Sampling sampling() const { return sampling_; }

    V evaluate(const History& history) const { return (*evaluator_)(history); }

    /// Steps of a simple integrand located on the path's grid.
    std::vector<Step> steps(const process::SamplePath& driver, const process::LevyPath* levy = nullptr) const
    {
        require(is_simple(), ErrorCode::InvalidArgument, "steps() needs a simple integrand");
        const auto& grid = driver.grid();
        require(std::abs(breakpoints_.back() - grid.horizon()) <= 1e-12 * std::max(1.0, grid.horizon()),
                ErrorCode::GridMismatch, "last breakpoint must equal the horizon");
        std::vector<Step> out;
        out.reserve(breakpoints_.size() - 1);
        std::size_t previous = grid.node_of(breakpoints_.front());
        for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
            const std::size_t node = grid.node_of(breakpoints_[i]);
            const std::size_t cut = sampling_ == Sampling::LeftPoint ? previous : node;
            out.push_back({previous, node, evaluate(History(driver, cut, levy))});
            previous = node;
        }
        return out;
    }

    /// Value on every grid cell (t_k, t_{k+1}].
    std::vector<V> sample_cells(const process::SamplePath& driver, const process::LevyPath* levy = nullptr) const
    {
        const std::size_t cells = driver.grid().cells();
        std::vector<V> out;
        out.reserve(cells);
        if (is_simple()) {
            for (auto& step : steps(driver, levy)) {
                for (std::size_t k = step.from; k < step.to; ++k) {
                    out.push_back(step.value);
                }
            }
            return out;
        }
        const std::size_t shift = sampling_ == Sampling::LeftPoint ? 0 : 1;
        for (std::size_t k = 0; k < cells; ++k) {
            out.push_back(evaluate(History(driver, k + shift, levy)));
        }
        return out;
    }

private:
    std::shared_ptr<const Evaluator> evaluator_;
    std::vector<double> breakpoints_;
    Sampling sampling_ = Sampling::LeftPoint;
};

using HIntegrand = Integrand<HVector>;
using SeqIntegrand = Integrand<SeqH>;
using OperatorIntegrand = Integrand<HSOperator>;

} // namespace itolevy::integrator
