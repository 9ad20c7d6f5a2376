#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfim {

/// Mergeable running statistics for a fixed-width vector observable stream,
/// with batch-means error bars.
///
/// Samples are grouped into fixed-size batches per source chain (one "block"
/// per chain, tagged by the chain id).  Merging keeps blocks sorted by tag and
/// reduces left-to-right, so any merge order yields bit-identical means for
/// the same partition of the input stream.
class EstimatorAccumulator {
  public:
    struct Block {
        std::uint64_t tag = 0;                    // source chain id
        std::vector<std::vector<double>> batch_sums;  // completed batches
        std::vector<double> tail_sum;             // open batch
        long tail_count = 0;
        std::vector<double> sumsq;                // over all samples of the block
    };

    EstimatorAccumulator() = default;
    EstimatorAccumulator(int dim, long batch_size, std::uint64_t tag)
        : dim_(dim), batch_size_(batch_size) {
        if (dim <= 0) throw std::invalid_argument("dimension must be positive");
        if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
        blocks_.push_back(Block{tag, {}, std::vector<double>(dim, 0.0), 0,
                                std::vector<double>(dim, 0.0)});
    }

    int dim() const { return dim_; }
    long batch_size() const { return batch_size_; }

    long count() const {
        long n = 0;
        for (const auto& b : blocks_)
            n += static_cast<long>(b.batch_sums.size()) * batch_size_ + b.tail_count;
        return n;
    }

    long n_batches() const {
        long n = 0;
        for (const auto& b : blocks_) n += static_cast<long>(b.batch_sums.size());
        return n;
    }

    /// Append one sample (must come from the single open block of an
    /// un-merged accumulator).
    void add(std::span<const double> sample) {
        if (static_cast<int>(sample.size()) != dim_)
            throw std::invalid_argument("sample dimension mismatch");
        if (blocks_.size() != 1)
            throw std::logic_error("cannot append to a merged accumulator");
        Block& b = blocks_.front();
        for (int i = 0; i < dim_; ++i) {
            b.tail_sum[i] += sample[i];
            b.sumsq[i] += sample[i] * sample[i];
        }
        if (++b.tail_count == batch_size_) {
            b.batch_sums.push_back(b.tail_sum);
            std::fill(b.tail_sum.begin(), b.tail_sum.end(), 0.0);
            b.tail_count = 0;
        }
    }

    void add(std::initializer_list<double> sample) {
        add(std::span<const double>(sample.begin(), sample.size()));
    }

    /// Associative, commutative merge; blocks are keyed by chain tag.
    void merge(const EstimatorAccumulator& other) {
        if (other.dim_ != dim_ || other.batch_size_ != batch_size_)
            throw std::invalid_argument("accumulator layout mismatch");
        for (const auto& b : other.blocks_) {
            auto it = std::lower_bound(blocks_.begin(), blocks_.end(), b.tag,
                                       [](const Block& x, std::uint64_t t) { return x.tag < t; });
            if (it != blocks_.end() && it->tag == b.tag)
                throw std::invalid_argument("merging accumulators with duplicate chain tag");
            blocks_.insert(it, b);
        }
    }

    double mean(int i) const {
        double s = 0.0;
        long n = 0;
        for (const auto& b : blocks_) {
            for (const auto& bs : b.batch_sums) s += bs[i];
            s += b.tail_sum[i];
            n += static_cast<long>(b.batch_sums.size()) * batch_size_ + b.tail_count;
        }
        if (n == 0) throw std::logic_error("no samples");
        return s / static_cast<double>(n);
    }

    /// Batch-means standard error of the mean (complete batches only).
    double se(int i) const {
        long nb = n_batches();
        if (nb < 2) return std::numeric_limits<double>::infinity();
        double mb = 0.0;
        for (const auto& b : blocks_)
            for (const auto& bs : b.batch_sums) mb += bs[i] / batch_size_;
        mb /= static_cast<double>(nb);
        double var = 0.0;
        for (const auto& b : blocks_)
            for (const auto& bs : b.batch_sums) {
                double d = bs[i] / batch_size_ - mb;
                var += d * d;
            }
        return std::sqrt(var / (static_cast<double>(nb) * (nb - 1)));
    }

    /// Means of every complete batch for slot i, in canonical (tag, index) order.
    std::vector<double> batch_means(int i) const {
        std::vector<double> out;
        for (const auto& b : blocks_)
            for (const auto& bs : b.batch_sums) out.push_back(bs[i] / batch_size_);
        return out;
    }

    /// Unbiased per-sample variance for slot i.
    double sample_variance(int i) const {
        double s = 0.0, sq = 0.0;
        long n = 0;
        for (const auto& b : blocks_) {
            for (const auto& bs : b.batch_sums) s += bs[i];
            s += b.tail_sum[i];
            sq += b.sumsq[i];
            n += static_cast<long>(b.batch_sums.size()) * batch_size_ + b.tail_count;
        }
        if (n < 2) return 0.0;
        double m = s / static_cast<double>(n);
        return std::max(0.0, (sq - n * m * m) / static_cast<double>(n - 1));
    }

    /// Integrated autocorrelation time from batch means vs sample variance.
    double iat_estimate(int i) const {
        long nb = n_batches();
        double sv = sample_variance(i);
        if (nb < 2 || sv <= 0) return 1.0;
        double s = se(i);
        return std::max(1.0, static_cast<double>(batch_size_) * (s * s * nb) / sv);
    }

  private:
    int dim_ = 0;
    long batch_size_ = 1;
    std::vector<Block> blocks_;  // sorted by tag
};

}  // namespace tfim
