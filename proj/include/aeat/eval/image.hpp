#pragma once

// Image transmission: 8-bit RGB rasters, binary PPM I/O and PSNR.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeat/eval/ber.hpp"

namespace aeat::eval {

struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, R G B per pixel
};

struct ImageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Raster read_ppm(const std::string& path);
void write_ppm(const Raster& img, const std::string& path);

// Returned for identical rasters.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();
double psnr(const Raster& a, const Raster& b);

// Row-major, R then G then B, most significant bit first.
std::vector<std::uint8_t> raster_to_bits(const Raster& img);
Raster bits_to_raster(const std::vector<std::uint8_t>& bits, std::size_t width, std::size_t height);
// Zero-pads to a whole number of blocks.
std::vector<std::uint8_t> pad_bits(const std::vector<std::uint8_t>& bits, std::size_t block);

struct ImageJob {
    Raster source;
    Raster received;
    std::size_t payload_bits = 0;
    std::size_t padded_bits = 0;
    std::uint64_t bit_errors = 0;
    double avg_active_layers = 0.0;
    double psnr_db = 0.0;
};

// Sends the padded bitstream block by block; block i uses the bits of the
// image and draws environment, channel and noise from RngStream(seed).derive(i).
ImageJob image_pipeline(const Raster& img, const BlockCodec& codec, const MaskPolicy& policy,
                        const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                        std::uint64_t seed, bool noiseless = false);

}  // namespace aeat::eval
