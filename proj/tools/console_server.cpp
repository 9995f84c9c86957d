// Console service: NDJSON session stream over TCP plus the HTTP endpoint.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "srload/error.hpp"
#include "srload/server.hpp"

namespace {
volatile std::sig_atomic_t interrupted = 0;
void on_signal(int) { interrupted = 1; }
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Loading console service"};
    std::string config_path, host = "127.0.0.1";
    int stream_port = 7410, http_port = 7411;
    app.add_option("--config", config_path, "base JSON configuration")->check(CLI::ExistingFile);
    app.add_option("--host", host, "bind address")->capture_default_str();
    app.add_option("--stream-port", stream_port, "NDJSON stream port (0 = any)")->capture_default_str();
    app.add_option("--http-port", http_port, "HTTP port (0 = any)")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    srload::SimConfig cfg;
    try {
        cfg = config_path.empty() ? srload::default_config() : srload::load_config(config_path);
    } catch (const srload::ValidationError& e) {
        std::cerr << "config error: " << e.where() << ": " << e.what() << "\n";
        return 2;
    }

    try {
        srload::ConsoleServer server(cfg, {.host = host, .stream_port = stream_port, .http_port = http_port});
        server.start();
        std::cout << "stream tcp://" << host << ":" << server.stream_port() << "\n"
                  << "http   http://" << host << ":" << server.http_port() << "\n"
                  << std::flush;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!interrupted)
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
