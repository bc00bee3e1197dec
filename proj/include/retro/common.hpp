#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace retro {

/// Violation of an API precondition (dimension mismatch, bad parameter range).
class contract_error : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// A sample identifier that is not valid for the oracle's mode.
class invalid_sample_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A diagnostic was requested but its required inputs are missing.
class diagnostic_unavailable : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Worker cap for parallel sections. Reads RETRO_OPT_THREADS once; falls back
/// to the hardware thread count.
inline unsigned max_threads() {
    static const unsigned cached = [] {
        if (const char* env = std::getenv("RETRO_OPT_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1 && v <= 1024) return static_cast<unsigned>(v);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1u : hw;
    }();
    return cached;
}

} // namespace retro
