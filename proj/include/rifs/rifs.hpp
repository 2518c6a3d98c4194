#pragma once

#include "rifs/bilinear.hpp"
#include "rifs/codec_io.hpp"
#include "rifs/compressed_image.hpp"
#include "rifs/contractivity_field.hpp"
#include "rifs/decoder.hpp"
#include "rifs/encoder.hpp"
#include "rifs/error.hpp"
#include "rifs/grid_model.hpp"
#include "rifs/parallel.hpp"
#include "rifs/plane.hpp"
#include "rifs/rifs_core.hpp"
