//! Browser demo surface; see `www/index.html`.
