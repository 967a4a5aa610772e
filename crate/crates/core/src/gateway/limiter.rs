use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Monotonic time source, injectable so tests run on simulated time.
pub trait Clock: Send + Sync {
    /// Time elapsed since the clock's origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Simulated clock: sleeping advances time instantly.
#[derive(Default)]
pub struct SimClock {
    now: Mutex<Duration>,
}

impl SimClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().expect("clock lock") += d;
    }
}

impl Clock for SimClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("clock lock")
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

/// Sliding-window limiter: at most `rpm` requests in any 60 second window.
pub struct RateLimiter {
    rpm: u32,
    window: Duration,
    sent: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(rpm: u32) -> Self {
        RateLimiter { rpm: rpm.max(1), window: Duration::from_secs(60), sent: Mutex::new(VecDeque::new()) }
    }

    pub fn rpm(&self) -> u32 {
        self.rpm
    }

    /// Blocks until a request may leave, then records it.
    pub fn acquire(&self, clock: &dyn Clock) {
        let mut sent = self.sent.lock().expect("limiter lock");
        loop {
            let now = clock.now();
            while sent.front().is_some_and(|&t| now.saturating_sub(t) >= self.window) {
                sent.pop_front();
            }
            if (sent.len() as u32) < self.rpm {
                sent.push_back(now);
                return;
            }
            let oldest = *sent.front().expect("full window");
            clock.sleep(oldest + self.window - now);
        }
    }
}
