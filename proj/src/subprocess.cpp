// SPDX-License-Identifier: Apache-2.0
#include "samosa/subprocess.hpp"

#include "samosa/clock.hpp"
#include "samosa/errors.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace samosa::proc {

namespace {

[[noreturn]] void child_exec(const std::vector<std::string>& argv) {
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv)
        cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
}

void kill_group(pid_t pid, int signo) {
    if (pid > 0)
        ::kill(-pid, signo);
}

int decode_status(int status) {
    if (WIFEXITED(status))
        return WEXITSTATUS(status);
    if (WIFSIGNALED(status))
        return 128 + WTERMSIG(status);
    return -1;
}

} // namespace

ExecResult run_command(const std::vector<std::string>& argv, int timeout_s) {
    if (argv.empty())
        throw SpawnError("run_command: empty argv");

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
        throw SpawnError("pipe() failed: " + std::string(std::strerror(errno)));

    ExecResult res;
    res.started_ns = wall_clock_ns();

    pid_t pid = ::fork();
    if (pid < 0)
        throw SpawnError("fork() failed: " + std::string(std::strerror(errno)));

    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
            ::close(devnull);
        }
        child_exec(argv);
    }

    ::setpgid(pid, pid); // also done in the child; whoever wins, same group
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    const std::int64_t deadline_ns =
        timeout_s > 0 ? res.started_ns + static_cast<std::int64_t>(timeout_s) * 1000000000LL
                      : 0;

    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    bool open_fd[2] = {true, true};
    std::string* sinks[2] = {&res.out, &res.err};
    char buf[4096];

    bool child_done = false;
    int status = 0;

    while (open_fd[0] || open_fd[1] || !child_done) {
        if (!child_done) {
            pid_t w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid)
                child_done = true;
        }
        if (deadline_ns > 0 && wall_clock_ns() > deadline_ns && !child_done) {
            res.timed_out = true;
            kill_group(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            child_done = true;
        }

        if (open_fd[0] || open_fd[1]) {
            fds[0].fd = open_fd[0] ? out_pipe[0] : -1;
            fds[1].fd = open_fd[1] ? err_pipe[0] : -1;
            int rc = ::poll(fds, 2, 50);
            if (rc > 0) {
                for (int i = 0; i < 2; ++i) {
                    if (!open_fd[i])
                        continue;
                    if (fds[i].revents & (POLLIN | POLLHUP)) {
                        ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
                        if (n > 0)
                            sinks[i]->append(buf, static_cast<size_t>(n));
                        else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
                            ::close(fds[i].fd);
                            open_fd[i] = false;
                        }
                    } else if (fds[i].revents & (POLLERR | POLLNVAL)) {
                        ::close(fds[i].fd);
                        open_fd[i] = false;
                    }
                }
            }
        } else if (!child_done) {
            sleep_ms(5);
        }
    }

    res.ended_ns = wall_clock_ns();
    res.exit_code = res.timed_out ? -1 : decode_status(status);
    return res;
}

ExecResult run_shell(const std::string& command_line, int timeout_s) {
    return run_command({"/bin/sh", "-c", command_line}, timeout_s);
}

Child::Child(Child&& other) noexcept
    : pid_(other.pid_), reaped_(other.reaped_), exit_code_(other.exit_code_) {
    other.pid_ = -1;
    other.reaped_ = true;
}

Child& Child::operator=(Child&& other) noexcept {
    if (this != &other) {
        if (pid_ > 0 && !reaped_)
            terminate(SIGKILL, 0);
        pid_ = other.pid_;
        reaped_ = other.reaped_;
        exit_code_ = other.exit_code_;
        other.pid_ = -1;
        other.reaped_ = true;
    }
    return *this;
}

Child::~Child() {
    if (pid_ > 0 && !reaped_)
        terminate(SIGKILL, 0);
}

Child Child::spawn(const std::vector<std::string>& argv,
                   const std::optional<std::filesystem::path>& stdout_path,
                   const std::optional<std::filesystem::path>& stderr_path) {
    if (argv.empty())
        throw SpawnError("Child::spawn: empty argv");

    pid_t pid = ::fork();
    if (pid < 0)
        throw SpawnError("fork() failed: " + std::string(std::strerror(errno)));

    if (pid == 0) {
        ::setpgid(0, 0);
        auto redirect = [](const std::optional<std::filesystem::path>& p, int fd) {
            if (!p)
                return;
            int f = ::open(p->c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
            if (f >= 0) {
                ::dup2(f, fd);
                ::close(f);
            }
        };
        redirect(stdout_path, STDOUT_FILENO);
        redirect(stderr_path, STDERR_FILENO);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
            ::close(devnull);
        }
        child_exec(argv);
    }

    ::setpgid(pid, pid);
    Child c;
    c.pid_ = pid;
    return c;
}

bool Child::running() {
    if (pid_ <= 0 || reaped_)
        return false;
    return !try_wait().has_value();
}

void Child::signal(int signo) {
    if (pid_ > 0 && !reaped_)
        kill_group(pid_, signo);
}

std::optional<int> Child::try_wait() {
    if (pid_ <= 0)
        return std::nullopt;
    if (reaped_)
        return exit_code_;
    int status = 0;
    pid_t w = ::waitpid(pid_, &status, WNOHANG);
    if (w == pid_) {
        reaped_ = true;
        exit_code_ = decode_status(status);
        return exit_code_;
    }
    return std::nullopt;
}

void Child::terminate(int signo, int wait_ms) {
    if (pid_ <= 0 || reaped_)
        return;
    kill_group(pid_, signo);
    std::int64_t deadline = wall_clock_ns() + static_cast<std::int64_t>(wait_ms) * 1000000LL;
    while (!try_wait()) {
        if (wall_clock_ns() >= deadline) {
            kill_group(pid_, SIGKILL);
            int status = 0;
            ::waitpid(pid_, &status, 0);
            reaped_ = true;
            exit_code_ = decode_status(status);
            break;
        }
        sleep_ms(5);
    }
}

} // namespace samosa::proc
