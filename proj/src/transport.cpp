#include "aerialvp/transport.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "aerialvp/error.hpp"

namespace aerialvp {

std::string Endpoint::key() const { return std::string(to_string(kind)) + ":" + address; }

std::string_view to_string(Endpoint::Kind kind) noexcept {
  return kind == Endpoint::Kind::Http ? "http" : "stdio";
}

Endpoint::Kind parse_endpoint_kind(std::string_view text) {
  if (text == "http") return Endpoint::Kind::Http;
  if (text == "stdio") return Endpoint::Kind::Stdio;
  throw InputError("unknown transport \"" + std::string(text) + "\" (expected http or stdio)");
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InputError("URL lacks a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

HttpTransport::HttpTransport(std::string url, HttpTimeouts timeouts) : timeouts_(timeouts) {
  std::tie(origin_, path_) = split_url(url);
}

std::string HttpTransport::post(const std::string& body, bool expect_body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeouts_.connect);
  client.set_read_timeout(timeouts_.read);
  client.set_write_timeout(timeouts_.read);
  auto res = client.Post(path_, {{"Accept", "application/json"}}, body, "application/json");
  if (!res) {
    throw EndpointUnreachableError("POST " + origin_ + path_ + " failed: " +
                                   httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw EndpointUnreachableError("POST " + origin_ + path_ + " returned HTTP " +
                                   std::to_string(res->status));
  }
  if (expect_body && res->body.empty()) {
    throw ProtocolError("empty HTTP response body", "");
  }
  return res->body;
}

std::string HttpTransport::exchange(const std::string& message) { return post(message, true); }

void HttpTransport::notify(const std::string& message) { post(message, false); }

bool read_line_fd(int fd, std::string& buffer, std::string& line) {
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer.empty()) return false;
      line = std::move(buffer);
      buffer.clear();
      return true;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

bool write_all_fd(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

StreamTransport::StreamTransport(int read_fd, int write_fd, pid_t child)
    : read_fd_(read_fd), write_fd_(write_fd), child_(child) {
  // A vanished peer must surface as an error, not kill the process.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });
}

StreamTransport::~StreamTransport() {
  if (write_fd_ >= 0) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_ > 0) {
    // Closing stdin lets a well-behaved server exit; give it a moment first.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(child_, nullptr, WNOHANG) == child_) return;
      ::usleep(10000);
    }
    ::kill(child_, SIGTERM);
    ::waitpid(child_, nullptr, 0);
  }
}

std::unique_ptr<StreamTransport> StreamTransport::spawn(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw EndpointUnreachableError(std::string("pipe failed: ") + std::strerror(errno));
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw EndpointUnreachableError(std::string("pipe failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw EndpointUnreachableError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<StreamTransport>(from_child[0], to_child[1], pid);
}

void StreamTransport::write_line(const std::string& message) {
  std::string framed = message;
  framed.push_back('\n');
  if (!write_all_fd(write_fd_, framed)) {
    throw EndpointUnreachableError("stream transport: peer closed input");
  }
}

std::string StreamTransport::read_line() {
  std::string line;
  while (true) {
    if (!read_line_fd(read_fd_, buffer_, line)) {
      throw EndpointUnreachableError("stream transport: peer closed output");
    }
    if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
  }
}

std::string StreamTransport::exchange(const std::string& message) {
  std::lock_guard lock(mutex_);
  write_line(message);
  return read_line();
}

void StreamTransport::notify(const std::string& message) {
  std::lock_guard lock(mutex_);
  write_line(message);
}

}  // namespace aerialvp
