// Small shared helpers: seeded randomness, stable hashing, CSV quoting and
// file I/O.

#ifndef CBIAS_UTIL_H_
#define CBIAS_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cbias {

// SplitMix64 step. Used to derive independent child seeds from one master
// seed so that every random stage of a run is reproducible.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Deterministic generator with a platform-independent output sequence
// (std::uniform_*_distribution is not portable across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // Uniform integer in [0, bound). bound > 0.
    std::uint64_t below(std::uint64_t bound);
    // Uniform real in [0, 1).
    double uniform();

    template <class T>
    void shuffle(std::vector<T> &items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

// 64-bit FNV-1a; stable across runs and platforms.
class Fnv1a {
public:
    void update(std::span<const std::byte> bytes);
    void update(std::string_view s);
    std::uint64_t digest() const { return hash_; }
    std::string hex() const;

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view field);
// Splits one CSV line honoring double-quoted fields.
std::vector<std::string> csv_split(std::string_view line);

std::vector<std::string> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view content);

}  // namespace cbias

#endif  // CBIAS_UTIL_H_
