#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "neoface/backends.hpp"
#include "neoface/json_io.hpp"

extern char** environ;

namespace neoface {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

std::string command_line(const std::vector<std::string>& argv) {
    std::string s;
    for (const auto& a : argv) {
        if (!s.empty()) s += ' ';
        s += a;
    }
    return s;
}

}  // namespace

SubprocessBackend::SubprocessBackend(std::vector<std::string> argv,
                                     std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw ConfigError("subprocess backend needs a command");
    descriptor_.kind = BackendKind::Subprocess;
    spawn();
}

SubprocessBackend::~SubprocessBackend() {
    try {
        shutdown();
    } catch (...) {
    }
}

void SubprocessBackend::spawn() {
    // A child that dies mid-write must surface as EPIPE, not kill us.
    std::signal(SIGPIPE, SIG_IGN);

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
        throw BackendError(BackendError::Kind::Unavailable, std::strerror(errno));
    }
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw BackendError(BackendError::Kind::Unavailable, std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        throw BackendError(BackendError::Kind::Unavailable,
                           "cannot start '" + command_line(argv_) + "': " + std::strerror(rc));
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();

    json hello;
    try {
        hello = json::parse(read_line());
    } catch (const json::parse_error&) {
        kill_child();
        throw BackendError(BackendError::Kind::Protocol,
                           "'" + command_line(argv_) + "' sent a malformed hello");
    }
    if (!hello.is_object() || hello.value("type", "") != "hello" || !hello.contains("name") ||
        !hello["name"].is_string()) {
        kill_child();
        throw BackendError(BackendError::Kind::Protocol,
                           "'" + command_line(argv_) + "' did not start with a hello message");
    }
    descriptor_.name = hello["name"].get<std::string>();
    try {
        descriptor_.landmark_names =
            hello.contains("landmarks") ? landmark_names_from_json(hello["landmarks"])
                                        : std::vector<LandmarkName>{};
    } catch (const ParseError& e) {
        kill_child();
        throw BackendError(BackendError::Kind::Protocol, descriptor_.name + ": " + e.what());
    }
}

void SubprocessBackend::kill_child() {
    close_fd(to_child_);
    close_fd(from_child_);
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
    buffer_.clear();
}

void SubprocessBackend::write_line(const std::string& line) {
    std::string payload = line + '\n';
    const char* p = payload.data();
    std::size_t left = payload.size();
    while (left > 0) {
        const ssize_t n = ::write(to_child_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string reason = std::strerror(errno);
            kill_child();
            throw BackendError(BackendError::Kind::Unavailable,
                               descriptor_.name + ": write to plugin failed: " + reason);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::string SubprocessBackend::read_line() {
    const auto deadline = Clock::now() + timeout_;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (remaining.count() <= 0) {
            kill_child();
            throw BackendError(BackendError::Kind::Timeout,
                               "'" + command_line(argv_) + "' did not answer within " +
                                   std::to_string(timeout_.count()) + " ms");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            kill_child();
            throw BackendError(BackendError::Kind::Unavailable, std::strerror(errno));
        }
        if (ready == 0) continue;
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            kill_child();
            throw BackendError(BackendError::Kind::Unavailable,
                               "'" + command_line(argv_) + "' exited unexpectedly");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::vector<Detection> SubprocessBackend::detect(const ImageRef& image) {
    if (pid_ <= 0) spawn();
    const std::string id = image.image_id + "_" + std::string(to_string(image.orientation));
    const json request = {{"type", "detect"},
                          {"id", id},
                          {"image_path", image.path.string()},
                          {"width", image.dims.w},
                          {"height", image.dims.h}};
    write_line(request.dump());
    json reply;
    try {
        reply = json::parse(read_line());
    } catch (const json::parse_error& e) {
        kill_child();
        throw BackendError(BackendError::Kind::Protocol,
                           descriptor_.name + ": malformed reply: " + e.what());
    }
    if (!reply.is_object() || reply.value("type", "") != "detections") {
        throw BackendError(BackendError::Kind::Protocol,
                           descriptor_.name + ": expected a detections message");
    }
    if (reply.value("id", "") != id) {
        throw BackendError(BackendError::Kind::Protocol,
                           descriptor_.name + ": reply id does not echo request '" + id + "'");
    }
    if (auto err = reply.find("error"); err != reply.end() && !err->is_null()) {
        throw BackendError(BackendError::Kind::Plugin,
                           descriptor_.name + ": " +
                               (err->is_string() ? err->get<std::string>() : err->dump()));
    }
    try {
        return detections_from_json(reply.value("detections", json::array()));
    } catch (const ParseError& e) {
        throw BackendError(BackendError::Kind::Protocol, descriptor_.name + ": " + e.what());
    }
}

int SubprocessBackend::shutdown() {
    if (pid_ <= 0) return -1;
    try {
        write_line(json{{"type", "shutdown"}}.dump());
    } catch (const BackendError&) {
        return -1;
    }
    close_fd(to_child_);
    const auto deadline = Clock::now() + std::chrono::seconds(2);
    int status = 0;
    while (Clock::now() < deadline) {
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            pid_ = -1;
            close_fd(from_child_);
            return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    kill_child();
    return -1;
}

}  // namespace neoface
