#include "propnet/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace propnet {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Io: return "io";
        case ErrorKind::Config: return "config";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Training: return "training";
        case ErrorKind::Checkpoint: return "checkpoint";
        case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

namespace {

LogLevel level_from_env() {
    const char* env = std::getenv("PROPNET_LOG");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
}

LogLevel g_level = level_from_env();

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "?";
}

}  // namespace

LogLevel log_level() { return g_level; }
void set_log_level(LogLevel level) { g_level = level; }

void log_message(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(g_level)) return;
    std::fprintf(stderr, "[propnet:%s] %s\n", level_tag(level), msg.c_str());
}

std::uint64_t Rng::poisson(double lambda) {
    if (lambda < 0.0) throw_error(ErrorKind::Domain, "poisson: lambda must be nonnegative");
    if (lambda == 0.0) return 0;
    if (lambda > 60.0) {
        // normal approximation for large rates
        double v = lambda + std::sqrt(lambda) * normal();
        return v <= 0.0 ? 0 : static_cast<std::uint64_t>(v + 0.5);
    }
    double limit = std::exp(-lambda);
    double prod = uniform();
    std::uint64_t n = 0;
    while (prod > limit) {
        prod *= uniform();
        ++n;
    }
    return n;
}

Rng Rng::stream(const std::string& tag) const {
    // FNV-1a over the tag, mixed with the current state
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return Rng(state_ ^ h);
}

}  // namespace propnet
