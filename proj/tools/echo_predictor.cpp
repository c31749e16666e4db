// Protocol test double: reads a manifest, answers 0.5 for every requested
// label. Failure modes for exercising the adapter's error paths are opt-in
// via --mode.
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

using nlohmann::json;

int main(int argc, char** argv) {
    std::string mode = "ok";
    std::vector<std::string> positional;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--mode" && i + 1 < argc) {
            mode = argv[++i];
        } else {
            positional.push_back(arg);
        }
    }
    if (positional.size() != 2) {
        std::cerr << "usage: echo_predictor [--mode ok|fail|malformed|drop-id|hang] "
                     "<manifest.json> <result.json>\n";
        return 2;
    }
    const std::string manifest_path = positional[0];
    const std::string result_path = positional[1];

    if (mode == "hang") {
        std::this_thread::sleep_for(std::chrono::seconds(3600));
        return 0;
    }
    if (mode == "fail") {
        std::cerr << "echo_predictor: simulated model failure\n";
        return 3;
    }

    std::ifstream manifest_file(manifest_path);
    if (!manifest_file) {
        std::cerr << "echo_predictor: cannot open manifest " << manifest_path << "\n";
        return 1;
    }
    json manifest;
    try {
        manifest_file >> manifest;
    } catch (const json::exception& e) {
        std::cerr << "echo_predictor: bad manifest: " << e.what() << "\n";
        return 1;
    }

    if (mode == "malformed") {
        std::ofstream out(result_path, std::ios::trunc);
        out << "{\"version\":1,\"items\":[{\"id\":"; // cut off mid-document
        return 0;
    }

    const auto labels = manifest.at("labels_requested").get<std::vector<std::string>>();
    json items = json::array();
    bool dropped = false;
    for (const auto& item : manifest.at("items")) {
        if (mode == "drop-id" && !dropped) {
            dropped = true;
            continue;
        }
        json entry;
        entry["id"] = item.at("id");
        entry["labels"] = labels;
        entry["probs"] = std::vector<double>(labels.size(), 0.5);
        items.push_back(std::move(entry));
    }

    json result;
    result["version"] = 1;
    result["items"] = std::move(items);
    std::ofstream out(result_path, std::ios::trunc);
    if (!out) {
        std::cerr << "echo_predictor: cannot write " << result_path << "\n";
        return 1;
    }
    out << result.dump(2) << "\n";
    return 0;
}
