#include "tkg/http.hpp"

#include "tkg/error.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace tkg {

namespace {

// Splits "scheme://host[:port]/path" into the client base and the path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw TransportError("invalid endpoint url '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpPost default_http_post(int timeout_seconds) {
    return [timeout_seconds](const std::string& url, const std::string& body, const HttpHeaders& headers) {
        const auto [base, path] = split_url(url);
        httplib::Client client(base);
        client.set_connection_timeout(timeout_seconds);
        client.set_read_timeout(timeout_seconds);
        httplib::Headers h;
        for (const auto& [k, v] : headers) {
            h.emplace(k, v);
        }
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            throw TransportError("request to " + base + path + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("request to " + base + path + " returned HTTP " + std::to_string(res->status));
        }
        return res->body;
    };
}

} // namespace tkg
