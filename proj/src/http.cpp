#include "storyaug/http.hpp"

#include "storyaug/errors.hpp"

#include <httplib.h>

#include <thread>

namespace storyaug {

RequestGate::RequestGate(int max_in_flight, std::chrono::milliseconds min_interval)
    : max_in_flight_(std::max(1, max_in_flight)), min_interval_(min_interval) {}

RequestGate::Ticket RequestGate::acquire() {
    std::unique_lock lock(mutex_);
    released_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
    const auto now = std::chrono::steady_clock::now();
    auto start = std::max(now, next_start_);
    next_start_ = start + min_interval_;
    lock.unlock();
    if (start > now) std::this_thread::sleep_until(start);
    return Ticket(*this);
}

RequestGate::Ticket::~Ticket() {
    if (!gate_) return;
    {
        std::lock_guard lock(gate_->mutex_);
        --gate_->in_flight_;
    }
    gate_->released_.notify_one();
}

JsonHttpClient::JsonHttpClient(HttpOptions options)
    : options_(std::move(options)),
      gate_(std::make_shared<RequestGate>(options_.max_in_flight, options_.min_interval)),
      attempts_made_(std::make_shared<std::atomic<std::size_t>>(0)) {
    const auto &url = options_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("endpoint must be an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    if (options_.attempts < 1) throw InvalidArgument("attempts must be positive");
}

std::size_t JsonHttpClient::attempts_made() const { return attempts_made_->load(); }

nlohmann::json JsonHttpClient::post(const std::string &path, const nlohmann::json &body,
                                    const std::vector<std::pair<std::string, std::string>> &headers) const {
    const std::string payload = body.dump();
    httplib::Headers hdrs;
    for (const auto &[k, v] : headers) hdrs.emplace(k, v);
    const auto timeout = options_.timeout;
    auto backoff = options_.backoff;

    for (int attempt = 1;; ++attempt) {
        const bool last = attempt == options_.attempts;
        std::string failure;
        bool timed_out = false;
        {
            auto ticket = gate_->acquire();
            attempts_made_->fetch_add(1);
            httplib::Client client(origin_);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            const auto started = std::chrono::steady_clock::now();
            auto res = client.Post(base_path_ + path, hdrs, payload, "application/json");
            if (!res) {
                const auto elapsed = std::chrono::steady_clock::now() - started;
                timed_out = elapsed >= timeout;
                failure = httplib::to_string(res.error());
            } else if (res->status >= 200 && res->status < 300) {
                try {
                    return nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::exception &e) {
                    throw MalformedResponse(std::string("response is not JSON: ") + e.what());
                }
            } else {
                std::string message = res->body;
                try {
                    const auto j = nlohmann::json::parse(res->body);
                    if (j.is_object() && j.contains("error")) {
                        const auto &err = j["error"];
                        message = err.is_string() ? err.get<std::string>()
                                  : err.is_object() && err.contains("message") ? err["message"].dump()
                                                                                : err.dump();
                    }
                } catch (const nlohmann::json::exception &) {
                }
                const bool retryable = res->status == 429 || res->status >= 500;
                if (!retryable || last) throw RemoteError(res->status, message);
            }
        }
        if (last && !failure.empty()) {
            if (timed_out) throw TimeoutError("request to " + origin_ + base_path_ + path + " timed out");
            throw TransportError("request to " + origin_ + base_path_ + path + " failed: " + failure);
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

} // namespace storyaug
