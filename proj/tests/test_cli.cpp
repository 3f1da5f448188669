// Copyright (c) the iotchain authors. All rights reserved.
// Licensed under the Apache 2.0 License.
