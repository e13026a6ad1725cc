#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace storyaug {

struct HttpOptions {
    std::string endpoint;               // scheme://host[:port][/base-path]
    std::chrono::milliseconds timeout{30'000};
    int attempts = 3;
    std::chrono::milliseconds backoff{500}; // doubled after every failed attempt
    int max_in_flight = 4;
    std::chrono::milliseconds min_interval{0}; // global spacing between request starts
};

/// Caps concurrent requests and spaces out request starts. Shared by copies of a client.
class RequestGate {
  public:
    RequestGate(int max_in_flight, std::chrono::milliseconds min_interval);

    class Ticket {
      public:
        explicit Ticket(RequestGate &gate) : gate_(&gate) {}
        Ticket(Ticket &&o) noexcept : gate_(std::exchange(o.gate_, nullptr)) {}
        Ticket(const Ticket &) = delete;
        ~Ticket();

      private:
        RequestGate *gate_;
    };

    Ticket acquire();

  private:
    std::mutex mutex_;
    std::condition_variable released_;
    int max_in_flight_;
    int in_flight_ = 0;
    std::chrono::milliseconds min_interval_;
    std::chrono::steady_clock::time_point next_start_{};
};

/// JSON-over-HTTP POST with retry and exponential backoff. Transport failures,
/// timeouts, 429 and 5xx are retried; other failures surface immediately as
/// TransportError, TimeoutError, RemoteError or MalformedResponse.
class JsonHttpClient {
  public:
    explicit JsonHttpClient(HttpOptions options);

    nlohmann::json post(const std::string &path, const nlohmann::json &body,
                        const std::vector<std::pair<std::string, std::string>> &headers = {}) const;

    /// Number of HTTP attempts issued so far, retries included.
    std::size_t attempts_made() const;

    const HttpOptions &options() const { return options_; }

  private:
    HttpOptions options_;
    std::string origin_;
    std::string base_path_;
    std::shared_ptr<RequestGate> gate_;
    std::shared_ptr<std::atomic<std::size_t>> attempts_made_;
};

} // namespace storyaug
