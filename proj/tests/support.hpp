#pragma once

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <thread>

namespace test {

inline std::filesystem::path fixture(const std::string &name) { return std::filesystem::path(STORYAUG_FIXTURES) / name; }

inline std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void spit(const std::filesystem::path &p, const std::string &content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("storyaug-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

// In-process HTTP server on a free local port, stopped on destruction.
class StubServer {
  public:
    explicit StubServer(const std::function<void(httplib::Server &)> &routes) {
        routes(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string &base = "") const { return "http://127.0.0.1:" + std::to_string(port_) + base; }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

inline void reply_json(httplib::Response &res, const nlohmann::json &body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

} // namespace test
