#include "audexplain/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace audexplain {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void write_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

} // namespace

AudioBuffer load_wav(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw Error(ErrorCode::unreadable_file, "cannot open '" + path + "'");
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                     std::istreambuf_iterator<char>());
    if (file.bad()) {
        throw Error(ErrorCode::unreadable_file, "read failure on '" + path + "'");
    }

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error(ErrorCode::malformed_wav, "'" + path + "' is not a RIFF/WAVE file");
    }

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) {
            throw Error(ErrorCode::malformed_wav, "truncated chunk in '" + path + "'");
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) {
                throw Error(ErrorCode::malformed_wav, "short fmt chunk in '" + path + "'");
            }
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) {
        throw Error(ErrorCode::malformed_wav, "missing fmt/data chunk in '" + path + "'");
    }
    if (channels < 1 || channels > 2 || rate == 0) {
        throw Error(ErrorCode::unsupported_encoding,
                    "'" + path + "': only mono/stereo with a positive rate is supported");
    }

    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool float32 = format == kFormatIeeeFloat && bits == 32;
    if (!pcm16 && !float32) {
        throw Error(ErrorCode::unsupported_encoding,
                    "'" + path + "': expected 16-bit PCM or 32-bit float, got format " +
                        std::to_string(format) + "/" + std::to_string(bits) + " bit");
    }

    const std::uint32_t bytes_per_sample = bits / 8;
    const std::uint32_t frame_size = bytes_per_sample * channels;
    const std::uint32_t frames = data_len / frame_size;
    if (frames == 0) {
        throw Error(ErrorCode::zero_length_audio, "'" + path + "' has no audio frames");
    }

    AudioBuffer out;
    out.sample_rate = static_cast<int>(rate);
    out.samples.resize(frames);
    for (std::uint32_t f = 0; f < frames; ++f) {
        float mixed = 0.0f;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + f * frame_size + c * bytes_per_sample;
            if (pcm16) {
                std::int16_t v;
                std::memcpy(&v, p, 2);
                mixed += static_cast<float>(v) / 32768.0f;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                mixed += v;
            }
        }
        out.samples[f] = channels == 2 ? mixed * 0.5f : mixed;
    }
    return out;
}

void save_wav(const AudioBuffer& buffer, const std::string& path) {
    if (buffer.empty()) {
        throw Error(ErrorCode::invalid_argument, "save_wav: empty buffer");
    }
    if (buffer.sample_rate <= 0) {
        throw Error(ErrorCode::invalid_argument, "save_wav: sample_rate must be positive");
    }
    require_finite(buffer, "save_wav");

    const std::uint32_t n = static_cast<std::uint32_t>(buffer.samples.size());
    const std::uint32_t data_len = n * 4;

    std::vector<unsigned char> out;
    out.reserve(58 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    write_u32(out, 4 + 26 + 12 + 8 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});

    out.insert(out.end(), {'f', 'm', 't', ' '});
    write_u32(out, 18);
    write_u16(out, kFormatIeeeFloat);
    write_u16(out, 1); // mono
    write_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
    write_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * 4);
    write_u16(out, 4);
    write_u16(out, 32);
    write_u16(out, 0); // cbSize

    // float-format WAVs carry a fact chunk with the frame count
    out.insert(out.end(), {'f', 'a', 'c', 't'});
    write_u32(out, 4);
    write_u32(out, n);

    out.insert(out.end(), {'d', 'a', 't', 'a'});
    write_u32(out, data_len);
    const std::size_t data_start = out.size();
    out.resize(out.size() + data_len);
    std::memcpy(out.data() + data_start, buffer.samples.data(), data_len);

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error(ErrorCode::unwritable_path, "cannot open '" + path + "' for writing");
    }
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    file.flush();
    if (!file) {
        throw Error(ErrorCode::unwritable_path, "write failure on '" + path + "'");
    }
}

} // namespace audexplain
