#include "wordprob/remote_lm.hpp"

#include <arpa/inet.h>
#include <csignal>
#include <cstring>
#include <netdb.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "wordprob/errors.hpp"
#include "wordprob/logprob.hpp"

namespace wordprob {

FdTransport::FdTransport(int read_fd, int write_fd)
    : read_fd_(read_fd), write_fd_(write_fd) {
  std::signal(SIGPIPE, SIG_IGN);
}

FdTransport::~FdTransport() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdTransport::send_line(const std::string& line) {
  std::string out = line;
  out.push_back('\n');
  size_t done = 0;
  while (done < out.size()) {
    ssize_t n = ::write(write_fd_, out.data() + done, out.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::BackendUnavailable,
                  std::string("write failed: ") + std::strerror(errno));
    }
    done += static_cast<size_t>(n);
  }
}

std::string FdTransport::recv_line() {
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::BackendUnavailable,
                  std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(ErrorCode::BackendUnavailable, "backend closed the connection");
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0)
    throw Error(ErrorCode::BackendUnavailable, "cannot resolve " + host);
  int fd = -1;
  for (addrinfo* rp = result; rp != nullptr; rp = rp->ai_next) {
    fd = ::socket(rp->ai_family, rp->ai_socktype, rp->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, rp->ai_addr, rp->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0)
    throw Error(ErrorCode::BackendUnavailable,
                "cannot connect to " + host + ":" + service);
  return std::make_unique<FdTransport>(fd, fd);
}

std::unique_ptr<LineTransport> spawn_subprocess(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw Error(ErrorCode::BackendUnavailable, "pipe failed");
  pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::BackendUnavailable, "fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdTransport>(from_child[0], to_child[1]);
}

RemoteLM::RemoteLM(std::unique_ptr<LineTransport> transport, const MarkedVocabulary& vocab,
                   double tolerance)
    : transport_(std::move(transport)),
      vocab_size_(vocab.size()),
      tolerance_(tolerance) {
  external_ids_.reserve(vocab.size());
  for (const auto& sw : vocab.subwords()) external_ids_.push_back(sw.id);
}

const Eigen::VectorXd& RemoteLM::next_log_distribution(std::span<const int> context) const {
  SubwordSequence key(context.begin(), context.end());
  auto hit = cache_.find(key);
  if (hit != cache_.end()) return hit->second;

  const long long id = next_id_++;
  nlohmann::json request;
  request["id"] = id;
  auto& ctx = request["context"] = nlohmann::json::array();
  for (int slot : context) ctx.push_back(external_ids_[slot]);
  transport_->send_line(request.dump());

  std::string line;
  for (;;) {
    auto stashed = pending_.find(id);
    if (stashed != pending_.end()) {
      line = std::move(stashed->second);
      pending_.erase(stashed);
      break;
    }
    std::string raw = transport_->recv_line();
    nlohmann::json reply = nlohmann::json::parse(raw, nullptr, false);
    if (reply.is_discarded() || !reply.contains("id") ||
        !reply["id"].is_number_integer())
      throw Error(ErrorCode::MalformedResponse, "unparseable reply: " + raw);
    const long long got = reply["id"].get<long long>();
    if (got == id) {
      line = std::move(raw);
      break;
    }
    pending_[got] = std::move(raw);  // out-of-order reply for a later request
  }

  nlohmann::json reply = nlohmann::json::parse(line);
  if (reply.contains("error"))
    throw Error(ErrorCode::BackendUnavailable,
                "backend error: " + reply["error"].get<std::string>());
  if (!reply.contains("logprobs") || !reply["logprobs"].is_array())
    throw Error(ErrorCode::MalformedResponse, "reply carries no logprobs array");
  const auto& arr = reply["logprobs"];
  if (static_cast<int>(arr.size()) != vocab_size_ + 1)
    throw Error(ErrorCode::MalformedResponse,
                "logprobs length " + std::to_string(arr.size()) + ", expected " +
                    std::to_string(vocab_size_ + 1));
  Eigen::VectorXd row(vocab_size_ + 1);
  for (int i = 0; i <= vocab_size_; ++i) {
    if (!arr[i].is_number())
      throw Error(ErrorCode::MalformedResponse, "non-numeric logprob entry");
    row(i) = arr[i].get<double>();
  }
  const double lse = logsumexp(row);
  if (std::abs(std::exp(lse) - 1.0) > tolerance_)
    throw Error(ErrorCode::NotNormalised,
                "backend distribution sums to " + std::to_string(std::exp(lse)));
  row.array() -= lse;  // absorb transport rounding
  auto [it, inserted] = cache_.emplace(std::move(key), std::move(row));
  (void)inserted;
  return it->second;
}

}  // namespace wordprob
