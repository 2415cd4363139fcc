#ifndef COVERTFBL_RNG_HPP
#define COVERTFBL_RNG_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace covertfbl::rng {

// Samples are partitioned into fixed-size chunks; chunk c of a stream uses a
// counter-based seed derived from (master seed, c). Results are therefore a
// pure function of (seed, kChunkSize) and independent of how chunks are
// assigned to threads.
inline constexpr std::uint64_t kChunkSize = 1u << 15;

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a master seed and a stream tag.
std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

// Stream tag from a double-valued label (e.g. a sweep axis value).
std::uint64_t tag_from_double(double v);

std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t chunk_index);

// Global worker-thread count (defaults to hardware concurrency). Changing it
// never changes numerical results, only wall time.
unsigned thread_count();
void set_thread_count(unsigned n);

// Runs fn(chunk_index, engine, first, count) for every chunk covering
// [0, total), possibly on several threads. fn must only write to state owned
// by its chunk index.
void for_each_chunk(std::uint64_t total, std::uint64_t seed,
                    const std::function<void(std::uint64_t, std::mt19937_64&,
                                             std::uint64_t, std::uint64_t)>& fn);

struct MeanEstimate {
    double mean = 0.0;
    double half95 = 0.0;  // 1.96 * stderr
    std::uint64_t count = 0;
};

// Deterministic chunked mean of a scalar statistic: sample(engine) is called
// `total` times; per-chunk partial sums are combined in chunk order.
MeanEstimate chunked_mean(std::uint64_t total, std::uint64_t seed,
                          const std::function<double(std::mt19937_64&)>& sample);

// Wilson score interval for a binomial proportion at z = 1.96.
struct Proportion {
    double p = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
};
Proportion wilson(std::uint64_t successes, std::uint64_t trials);

}  // namespace covertfbl::rng

#endif
