#pragma once

#include <map>
#include <memory>
#include <string>

#include "wordprob/lm.hpp"
#include "wordprob/tokeniser.hpp"

namespace wordprob {

// Blocking newline-delimited transport.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  virtual std::string recv_line() = 0;  // BackendUnavailable on EOF
};

// Owns a read/write fd pair (pipe ends or a socket).
class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd);
  ~FdTransport() override;
  void send_line(const std::string& line) override;
  std::string recv_line() override;

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, int port);
// Runs `command` through /bin/sh with the protocol on its stdio.
std::unique_ptr<LineTransport> spawn_subprocess(const std::string& command);

// Client for external LM backends speaking newline-delimited JSON.
// Request:  {"id": <int>, "context": [<external id>...]}
// Response: {"id": <int>, "logprobs": [<float>...]}  (vocab_size+1, eos last)
// Errors:   {"id": <int>, "error": "<string>"}
// Responses may arrive out of order and are matched by id. One request is in
// flight at a time; responses are cached so equal contexts hit the backend once.
class RemoteLM : public ConditionalLM {
 public:
  RemoteLM(std::unique_ptr<LineTransport> transport, const MarkedVocabulary& vocab,
           double tolerance = 1e-4);

  int vocab_size() const override { return vocab_size_; }
  const Eigen::VectorXd& next_log_distribution(std::span<const int> context) const override;

 private:
  std::unique_ptr<LineTransport> transport_;
  std::vector<std::int32_t> external_ids_;
  int vocab_size_;
  double tolerance_;
  mutable long long next_id_ = 0;
  mutable std::map<SubwordSequence, Eigen::VectorXd> cache_;
  mutable std::map<long long, std::string> pending_;
};

}  // namespace wordprob
