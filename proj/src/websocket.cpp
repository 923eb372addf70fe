#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "oshield/service.hpp"

namespace oshield {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Session;

// Registry of connected clients; frames fan out to all of them.
class Hub {
 public:
  explicit Hub(GameService& service) : service(service) {}

  void join(const std::shared_ptr<Session>& s) {
    std::lock_guard lock(mutex_);
    sessions_.insert(s);
  }
  void leave(const std::shared_ptr<Session>& s) {
    std::lock_guard lock(mutex_);
    sessions_.erase(s);
  }
  void broadcast(const std::string& message);
  void close_all();

  GameService& service;

 private:
  std::mutex mutex_;
  std::set<std::shared_ptr<Session>> sessions_;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->hub_.join(self);
      self->send(self->hub_.service.frame());
      self->read();
    });
  }

  void send(std::string message) {
    net::post(ws_.get_executor(), [self = shared_from_this(), m = std::move(message)]() mutable {
      self->queue_.push_back(std::move(m));
      if (self->queue_.size() == 1) self->write();
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->hub_.leave(self);
        return;
      }
      const std::string message = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      // a misbehaving client only ever gets error replies
      self->hub_.service.handle(message, [self](const std::string& reply) { self->send(reply); });
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->hub_.leave(self);
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  Hub& hub_;
};

void Hub::broadcast(const std::string& message) {
  std::lock_guard lock(mutex_);
  for (const auto& s : sessions_) s->send(message);
}

void Hub::close_all() {
  std::lock_guard lock(mutex_);
  for (const auto& s : sessions_) s->close();
  sessions_.clear();
}

}  // namespace

struct WebSocketServer::Impl {
  Impl(GameService& service, unsigned short port)
      : service(service), hub(service), acceptor(ioc, tcp::endpoint(net::ip::make_address("0.0.0.0"), port)) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<Session>(std::move(socket), hub)->start();
      accept();
    });
  }

  void game_loop() {
    std::unique_lock lock(stop_mutex);
    while (!stopping) {
      lock.unlock();
      service.tick();
      lock.lock();
      stop_cv.wait_for(lock, service.tick_interval(), [this] { return stopping; });
    }
  }

  GameService& service;
  Hub hub;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::thread io_thread;
  std::thread loop_thread;
  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopping = false;
  bool started = false;
};

WebSocketServer::WebSocketServer(GameService& service, unsigned short port)
    : impl_(std::make_unique<Impl>(service, port)) {}

WebSocketServer::~WebSocketServer() { stop(); }

unsigned short WebSocketServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WebSocketServer::start() {
  if (impl_->started) return;
  impl_->started = true;
  impl_->service.set_broadcast([hub = &impl_->hub](const std::string& m) { hub->broadcast(m); });
  impl_->accept();
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
  impl_->loop_thread = std::thread([this] { impl_->game_loop(); });
}

void WebSocketServer::stop() {
  if (!impl_->started) return;
  impl_->started = false;
  {
    std::lock_guard lock(impl_->stop_mutex);
    impl_->stopping = true;
  }
  impl_->stop_cv.notify_all();
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
  impl_->service.set_broadcast(nullptr);
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->hub.close_all();
  impl_->ioc.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

}  // namespace oshield
