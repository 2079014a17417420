#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <sys/types.h>

namespace aerialvp {

/// Where a tool server lives.
struct Endpoint {
  enum class Kind { Http, Stdio };
  Kind kind = Kind::Http;
  /// URL for Http ("http://127.0.0.1:8931/mcp"), shell command for Stdio.
  std::string address;

  std::string key() const;
  bool operator==(const Endpoint&) const = default;
};

std::string_view to_string(Endpoint::Kind kind) noexcept;
/// "http" or "stdio"; throws InputError otherwise.
Endpoint::Kind parse_endpoint_kind(std::string_view text);

/// Called for every raw message crossing a transport. `outgoing` is true for
/// messages sent by this side.
using MessageObserver = std::function<void(bool outgoing, const std::string& raw)>;

/// Carries one JSON-RPC message per call. Implementations throw
/// EndpointUnreachableError on I/O failure.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Sends one message and returns the peer's reply.
  virtual std::string exchange(const std::string& message) = 0;
  /// Sends a message that expects no reply.
  virtual void notify(const std::string& message) = 0;
  /// True if exchange() may be called from several threads at once.
  virtual bool concurrent() const noexcept { return false; }
};

struct HttpTimeouts {
  std::chrono::milliseconds connect{2000};
  std::chrono::milliseconds read{60000};
};

/// One JSON-RPC object per HTTP POST.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string url, HttpTimeouts timeouts = {});
  std::string exchange(const std::string& message) override;
  void notify(const std::string& message) override;
  bool concurrent() const noexcept override { return true; }

 private:
  std::string post(const std::string& body, bool expect_body);

  std::string origin_;
  std::string path_;
  HttpTimeouts timeouts_;
};

/// Newline-delimited JSON over a pair of file descriptors. Owns both.
class StreamTransport final : public Transport {
 public:
  StreamTransport(int read_fd, int write_fd, pid_t child = -1);
  ~StreamTransport() override;
  StreamTransport(const StreamTransport&) = delete;
  StreamTransport& operator=(const StreamTransport&) = delete;

  /// Starts `/bin/sh -c command` with its stdin/stdout wired to the transport.
  static std::unique_ptr<StreamTransport> spawn(const std::string& command);

  std::string exchange(const std::string& message) override;
  void notify(const std::string& message) override;

 private:
  void write_line(const std::string& message);
  std::string read_line();

  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string buffer_;
  std::mutex mutex_;
};

/// Reads one '\n'-terminated line from `fd` using `buffer` for leftovers.
/// Returns false on EOF before any byte of a new line.
bool read_line_fd(int fd, std::string& buffer, std::string& line);
/// Writes all of `data`; returns false on failure.
bool write_all_fd(int fd, std::string_view data);

/// Splits "http://host:port/path" into origin and path ("/" if absent).
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace aerialvp
