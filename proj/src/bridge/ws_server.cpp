#include "skilladapt/bridge/ws_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <thread>

namespace skilladapt::bridge {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub, int heartbeat) : ws_(std::move(socket)), hub_(hub), heartbeat_(heartbeat) {}
  ~Session() { finish(); }

  void run() {
    websocket::stream_base::timeout opt{};
    opt.handshake_timeout = std::chrono::seconds(10);
    // Beast pings once half the idle timeout has passed without traffic.
    opt.idle_timeout = std::chrono::seconds(2 * heartbeat_);
    opt.keep_alive_pings = true;
    ws_.set_option(opt);
    ws_.text(true);
    ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<Session> weak = shared_from_this();
    auto exec = ws_.get_executor();
    id_ = hub_.connect([weak, exec] {
      net::post(exec, [weak] {
        if (auto s = weak.lock()) s->flush();
      });
    });
    connected_ = true;
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    const auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    hub_.on_message(id_, text);
    read();
  }

  void flush() {
    if (writing_ || !connected_) return;
    auto next = hub_.pop(id_);
    if (!next) return;
    writing_ = true;
    out_ = std::move(*next);
    ws_.async_write(net::buffer(out_), beast::bind_front_handler(&Session::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      finish();
      return;
    }
    flush();
  }

  void finish() {
    if (!connected_) return;
    connected_ = false;
    hub_.disconnect(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  int heartbeat_;
  beast::flat_buffer buffer_;
  Hub::ClientId id_ = 0;
  bool connected_ = false;
  bool writing_ = false;
  std::string out_;
};

}  // namespace

struct WebSocketServer::Impl {
  Hub& hub;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::atomic<std::uint16_t> port{0};
  std::mutex sessions_mutex;
  std::vector<std::weak_ptr<Session>> sessions;

  Impl(Hub& h, ServerOptions o) : hub(h), options(std::move(o)) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      auto s = std::make_shared<Session>(std::move(socket), hub, options.heartbeat_seconds);
      {
        std::lock_guard lock(sessions_mutex);
        sessions.push_back(s);
      }
      s->run();
      accept();
    });
  }
};

WebSocketServer::WebSocketServer(Hub& hub, ServerOptions options)
    : impl_(std::make_unique<Impl>(hub, std::move(options))) {}

WebSocketServer::~WebSocketServer() { stop(); }

void WebSocketServer::start() {
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.host, ec);
  if (ec) throw Error(ErrorCode::BindFailure, "invalid host '" + impl_->options.host + "'");
  const tcp::endpoint ep(address, impl_->options.port);
  auto& a = impl_->acceptor;
  a.open(ep.protocol(), ec);
  if (!ec) a.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(ep, ec);
  if (!ec) a.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    beast::error_code ignored;
    a.close(ignored);
    throw Error(ErrorCode::BindFailure, "cannot listen on " + impl_->options.host + ":" +
                                            std::to_string(impl_->options.port) + ": " + ec.message());
  }
  impl_->port = a.local_endpoint().port();
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void WebSocketServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  {
    std::lock_guard lock(impl_->sessions_mutex);
    for (auto& w : impl_->sessions) {
      if (auto s = w.lock()) s->close();
    }
  }
  // Let pending closes run, then stop the loop.
  net::post(impl_->ioc, [this] { impl_->ioc.stop(); });
  impl_->thread.join();
}

std::uint16_t WebSocketServer::port() const { return impl_->port; }

}  // namespace skilladapt::bridge
