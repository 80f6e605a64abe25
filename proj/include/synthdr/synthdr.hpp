#pragma once

#include "synthdr/annotate.hpp"
#include "synthdr/bvh.hpp"
#include "synthdr/camera.hpp"
#include "synthdr/config.hpp"
#include "synthdr/dataset.hpp"
#include "synthdr/eval.hpp"
#include "synthdr/image.hpp"
#include "synthdr/image_io.hpp"
#include "synthdr/material.hpp"
#include "synthdr/math.hpp"
#include "synthdr/mesh.hpp"
#include "synthdr/mesh_io.hpp"
#include "synthdr/postfx.hpp"
#include "synthdr/raster.hpp"
#include "synthdr/render.hpp"
#include "synthdr/rng.hpp"
#include "synthdr/sampler.hpp"
#include "synthdr/scene.hpp"
#include "synthdr/texture.hpp"
