#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace tkg {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// POST `body` (JSON) to `url`; returns the response body. Throws
// TransportError on connection failure or non-2xx status.
using HttpPost = std::function<std::string(const std::string& url, const std::string& body, const HttpHeaders&)>;

HttpPost default_http_post(int timeout_seconds = 60);

} // namespace tkg
