// Test plugin speaking the detector protocol. Replies with records from a
// precomputed-detections file, looked up by the request id
// "<image_id>_<orientation>". Flags make it misbehave on purpose.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

struct Options {
    std::string detections;
    std::string log;
    int sleep_ms = 0;
    int crash_after = -1;
    bool wrong_id = false;
    bool plugin_error = false;
    bool no_hello = false;
    bool check_image = false;
    int shutdown_code = 0;
};

Options parse(int argc, char** argv) {
    Options o;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&]() -> std::string {
            if (i + 1 >= argc) {
                std::cerr << "missing value for " << a << '\n';
                std::exit(64);
            }
            return argv[++i];
        };
        if (a == "--sleep-ms") o.sleep_ms = std::stoi(next());
        else if (a == "--crash-after") o.crash_after = std::stoi(next());
        else if (a == "--log") o.log = next();
        else if (a == "--wrong-id") o.wrong_id = true;
        else if (a == "--plugin-error") o.plugin_error = true;
        else if (a == "--no-hello") o.no_hello = true;
        else if (a == "--check-image") o.check_image = true;
        else if (a == "--shutdown-code") o.shutdown_code = std::stoi(next());
        else o.detections = a;
    }
    return o;
}

void send(const json& msg) { std::cout << msg.dump() << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
    const Options opt = parse(argc, argv);
    json table = json::object();
    json doc = {{"backend", "echo"}, {"landmarks", json::array()}, {"results", json::array()}};
    if (!opt.detections.empty()) {
        std::ifstream in(opt.detections);
        doc = json::parse(in);
    }
    for (const json& r : doc["results"]) {
        const std::string key =
            r["image_id"].get<std::string>() + "_" + r.value("orientation", std::string("R0"));
        table[key] = r["detections"];
    }
    std::ofstream log;
    if (!opt.log.empty()) log.open(opt.log, std::ios::app);

    if (opt.no_hello) {
        send({{"type", "detections"}, {"id", ""}, {"detections", json::array()}});
    } else {
        send({{"type", "hello"}, {"name", doc.value("backend", "echo")},
              {"landmarks", doc.value("landmarks", json::array())}});
    }

    int handled = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (log.is_open()) log << line << '\n' << std::flush;
        const json req = json::parse(line);
        const std::string type = req.value("type", "");
        if (type == "shutdown") return opt.shutdown_code;
        if (type != "detect") continue;
        if (opt.crash_after >= 0 && handled >= opt.crash_after) std::abort();
        ++handled;
        if (opt.sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(opt.sleep_ms));

        const std::string id = req.value("id", "");
        json reply = {{"type", "detections"}, {"id", opt.wrong_id ? id + "x" : id}};
        if (opt.plugin_error) {
            reply["error"] = "model failed on " + id;
        } else if (opt.check_image && !std::ifstream(req.value("image_path", "")).good()) {
            reply["error"] = "cannot open " + req.value("image_path", "");
        } else {
            auto it = table.find(id);
            reply["detections"] = it == table.end() ? json::array() : *it;
        }
        send(reply);
    }
    return 0;
}
