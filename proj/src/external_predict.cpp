#include "audexplain/predict.hpp"
#include "audexplain/wav.hpp"

#include <json.hpp>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

namespace audexplain {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ChildResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string stderr_output;
};

ChildResult run_child(const std::vector<std::string>& argv, double timeout_seconds) {
    int err_pipe[2];
    if (pipe(err_pipe) != 0) {
        throw Error(ErrorCode::subprocess_failed, "pipe() failed: " + std::string(strerror(errno)));
    }

    const pid_t pid = fork();
    if (pid < 0) {
        close(err_pipe[0]);
        close(err_pipe[1]);
        throw Error(ErrorCode::subprocess_failed, "fork() failed: " + std::string(strerror(errno)));
    }
    if (pid == 0) {
        close(err_pipe[0]);
        dup2(err_pipe[1], STDERR_FILENO);
        close(err_pipe[1]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        fprintf(stderr, "exec failed: %s: %s\n", args[0], strerror(errno));
        _exit(127);
    }

    close(err_pipe[1]);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    ChildResult result;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    char buffer[4096];
    int status = 0;
    for (;;) {
        const ssize_t got = read(err_pipe[0], buffer, sizeof(buffer));
        if (got > 0) result.stderr_output.append(buffer, static_cast<std::size_t>(got));

        const pid_t waited = waitpid(pid, &status, WNOHANG);
        if (waited == pid) break;
        if (std::chrono::steady_clock::now() > deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    // Drain whatever stderr remains.
    for (;;) {
        const ssize_t got = read(err_pipe[0], buffer, sizeof(buffer));
        if (got <= 0) break;
        result.stderr_output.append(buffer, static_cast<std::size_t>(got));
    }
    close(err_pipe[0]);

    if (!result.timed_out) {
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
    }
    return result;
}

std::string diag_excerpt(const std::string& text) {
    constexpr std::size_t limit = 512;
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

} // namespace

std::vector<Prediction> external_predict(const ExternalCommand& command,
                                         const std::vector<AudioBuffer>& batch,
                                         const std::vector<std::string>& labels_requested,
                                         const std::string& workdir, double timeout_seconds) {
    if (batch.empty()) {
        throw Error(ErrorCode::invalid_argument, "external_predict: empty batch");
    }
    if (command.argv.empty()) {
        throw Error(ErrorCode::invalid_argument, "external_predict: empty command");
    }

    fs::create_directories(workdir);
    const int sample_rate = batch[0].sample_rate;
    for (const auto& buffer : batch) {
        if (buffer.sample_rate != sample_rate) {
            throw Error(ErrorCode::invalid_argument,
                        "external_predict: batch sample rates must be uniform");
        }
    }

    json manifest;
    manifest["version"] = 1;
    manifest["sample_rate"] = sample_rate;
    manifest["labels_requested"] = labels_requested;
    json items = json::array();
    std::vector<std::string> ids;
    ids.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        char id[32];
        snprintf(id, sizeof(id), "item-%04zu", i);
        ids.emplace_back(id);
        const fs::path wav_path = fs::path(workdir) / (ids.back() + ".wav");
        save_wav(batch[i], wav_path.string());
        items.push_back({{"id", ids.back()}, {"path", wav_path.string()}});
    }
    manifest["items"] = std::move(items);

    const fs::path manifest_path = fs::path(workdir) / "manifest.json";
    const fs::path result_path = fs::path(workdir) / "result.json";
    std::error_code ec;
    fs::remove(result_path, ec);
    {
        std::ofstream file(manifest_path, std::ios::trunc);
        if (!file) {
            throw Error(ErrorCode::io_error, "cannot write manifest to '" + workdir + "'");
        }
        file << manifest.dump(2) << "\n";
    }

    std::vector<std::string> argv = command.argv;
    argv.push_back(manifest_path.string());
    argv.push_back(result_path.string());
    const ChildResult child = run_child(argv, timeout_seconds);
    if (child.timed_out) {
        throw Error(ErrorCode::subprocess_timeout,
                    "predictor '" + command.argv[0] + "' exceeded " +
                        std::to_string(timeout_seconds) + " s; stderr: " +
                        diag_excerpt(child.stderr_output));
    }
    if (child.exit_code != 0) {
        throw Error(ErrorCode::subprocess_failed,
                    "predictor '" + command.argv[0] + "' exited with status " +
                        std::to_string(child.exit_code) + "; stderr: " +
                        diag_excerpt(child.stderr_output));
    }

    std::ifstream result_file(result_path);
    if (!result_file) {
        throw Error(ErrorCode::protocol_violation,
                    "predictor wrote no result file at '" + result_path.string() + "'");
    }
    json doc;
    try {
        result_file >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol_violation,
                    std::string("malformed result JSON: ") + e.what());
    }

    std::map<std::string, Prediction> by_id;
    try {
        for (const auto& item : doc.at("items")) {
            Prediction p;
            p.labels = item.at("labels").get<std::vector<std::string>>();
            p.probabilities = item.at("probs").get<std::vector<double>>();
            if (p.labels.size() != p.probabilities.size()) {
                throw Error(ErrorCode::protocol_violation,
                            "result item '" + item.at("id").get<std::string>() +
                                "': labels/probs length mismatch");
            }
            by_id[item.at("id").get<std::string>()] = std::move(p);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::protocol_violation,
                    std::string("malformed result JSON: ") + e.what());
    }

    std::vector<Prediction> out;
    out.reserve(batch.size());
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::protocol_violation, "result missing id '" + id + "'");
        }
        out.push_back(it->second);
    }
    return out;
}

} // namespace audexplain
