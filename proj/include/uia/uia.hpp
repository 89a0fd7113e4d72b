#pragma once

#include "uia/actions.hpp"
#include "uia/bytes.hpp"
#include "uia/crypto.hpp"
#include "uia/identity.hpp"
#include "uia/label.hpp"
#include "uia/record.hpp"
#include "uia/replication.hpp"
#include "uia/resolver.hpp"
#include "uia/routing.hpp"
#include "uia/scenario.hpp"
#include "uia/simnet.hpp"
#include "uia/store.hpp"
#include "uia/view.hpp"
#include "uia/wire.hpp"
