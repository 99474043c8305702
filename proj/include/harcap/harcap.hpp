#pragma once

#include <harcap/cache.hpp>
#include <harcap/captiongen.hpp>
#include <harcap/config.hpp>
#include <harcap/dataset.hpp>
#include <harcap/error.hpp>
#include <harcap/http_providers.hpp>
#include <harcap/image_io.hpp>
#include <harcap/keyframe.hpp>
#include <harcap/metrics.hpp>
#include <harcap/pipeline.hpp>
#include <harcap/protocol.hpp>
#include <harcap/providers.hpp>
#include <harcap/text.hpp>
