#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>

namespace netsurv {

/// Neumaier-compensated scalar accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }

    double value() const { return sum + comp; }
};

/// Per-day compensated accumulators, indexed 0..days-1.
class CompensatedVector {
public:
    CompensatedVector() = default;
    explicit CompensatedVector(Eigen::Index size)
        : sum_(Eigen::VectorXd::Zero(size)), comp_(Eigen::VectorXd::Zero(size)) {}

    void add(Eigen::Index i, double x) {
        double& s = sum_[i];
        const double t = s + x;
        comp_[i] += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }

    Eigen::Index size() const { return sum_.size(); }
    bool empty() const { return sum_.size() == 0; }
    Eigen::VectorXd value() const { return sum_ + comp_; }

private:
    Eigen::VectorXd sum_;
    Eigen::VectorXd comp_;
};

unsigned default_threads();

/// Calls `fn(block)` for every block in [0, blocks) using up to `threads`
/// workers. Callers write each block's result to its own slot so the final
/// reduction order never depends on the thread count.
void parallel_for_blocks(std::size_t blocks, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Fixed block size for patient loops: depends only on `n`.
std::size_t patient_block_size(std::size_t n);

} // namespace netsurv
