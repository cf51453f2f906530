#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "volfair/smt.hpp"

namespace volfair::smt {

Process::Process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw SpawnError("empty solver command line");
  int to_child[2];
  int from_child[2];
  int status_pipe[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0 || pipe(status_pipe) != 0) {
    throw SpawnError(std::string("pipe: ") + std::strerror(errno));
  }
  fcntl(status_pipe[1], F_SETFD, FD_CLOEXEC);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) throw SpawnError(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    close(status_pipe[0]);
    execvp(args[0], args.data());
    int err = errno;
    (void)!::write(status_pipe[1], &err, sizeof err);
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  close(status_pipe[1]);
  in_fd_ = to_child[1];
  out_fd_ = from_child[0];

  // The status pipe closes on a successful exec and carries errno otherwise.
  int err = 0;
  ssize_t n = ::read(status_pipe[0], &err, sizeof err);
  close(status_pipe[0]);
  if (n == sizeof err) {
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
    close(in_fd_);
    close(out_fd_);
    throw SpawnError("cannot start solver '" + argv[0] + "': " + std::strerror(err));
  }
  signal(SIGPIPE, SIG_IGN);
}

Process::~Process() {
  if (in_fd_ >= 0) close(in_fd_);
  if (out_fd_ >= 0) close(out_fd_);
  if (pid_ > 0) {
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
}

void Process::write(std::string_view text) {
  while (!text.empty()) {
    ssize_t n = ::write(in_fd_, text.data(), text.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SolverError(std::string("write to solver failed: ") + std::strerror(errno));
    }
    text.remove_prefix(static_cast<std::size_t>(n));
  }
}

int Process::get() {
  if (pos_ == buffer_.size()) {
    char chunk[4096];
    ssize_t n;
    do {
      n = ::read(out_fd_, chunk, sizeof chunk);
    } while (n < 0 && errno == EINTR);
    if (n <= 0) return -1;
    buffer_.assign(chunk, static_cast<std::size_t>(n));
    pos_ = 0;
  }
  return static_cast<unsigned char>(buffer_[pos_++]);
}

std::string Process::read_sexpr() {
  std::string out;
  int c;
  do {
    c = get();
    if (c < 0) throw SolverError("solver closed its output");
  } while (std::isspace(c));

  if (c != '(') {
    out.push_back(static_cast<char>(c));
    while (true) {
      c = get();
      if (c < 0 || std::isspace(c)) break;
      out.push_back(static_cast<char>(c));
    }
    return out;
  }

  int depth = 0;
  bool in_string = false;
  bool in_quote = false;
  while (true) {
    out.push_back(static_cast<char>(c));
    if (in_string) {
      if (c == '"') in_string = false;
    } else if (in_quote) {
      if (c == '|') in_quote = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '|') {
      in_quote = true;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth == 0) return out;
    }
    c = get();
    if (c < 0) throw SolverError("solver closed its output mid-response");
  }
}

bool Process::alive() {
  if (pid_ <= 0) return false;
  int status = 0;
  return waitpid(pid_, &status, WNOHANG) == 0;
}

}  // namespace volfair::smt
