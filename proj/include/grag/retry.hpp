#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <thread>

#include "grag/error.hpp"

namespace grag {

struct RetryPolicy {
    int max_retries = 3;  // attempts after the first one
    std::chrono::milliseconds initial_backoff{100};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{5000};

    std::chrono::milliseconds backoff_for(int retry) const {
        double delay = static_cast<double>(initial_backoff.count());
        for (int i = 0; i < retry; ++i) delay *= multiplier;
        return std::min(max_backoff, std::chrono::milliseconds(static_cast<long long>(delay)));
    }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

// Runs `call`, retrying TransportError (and RateLimitError, honouring its
// retry-after hint) with exponential backoff. Other errors propagate at once;
// the last transport error propagates once retries are exhausted.
template <typename Call>
auto with_retry(const RetryPolicy& policy, Call&& call, const Sleeper& sleep = sleep_for) -> decltype(call()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return call();
        } catch (const RateLimitError& e) {
            if (attempt >= policy.max_retries) throw;
            sleep(std::max(policy.backoff_for(attempt), std::chrono::milliseconds(e.retry_after_ms())));
        } catch (const TransportError&) {
            if (attempt >= policy.max_retries) throw;
            sleep(policy.backoff_for(attempt));
        }
    }
}

}  // namespace grag
