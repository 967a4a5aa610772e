use crate::task::{format_clock, Payload, Solution};

/// Canonical answer text for a solution, in the format the prompts ask for.
/// [`super::parse_answer`] maps it back to the same solution.
pub fn render_answer(payload: &Payload, solution: &Solution) -> String {
    match (payload, solution) {
        (Payload::TripPlanning(p), Solution::TripPlan(legs)) => {
            let mut out = format!(
                "Here is the trip plan for visiting the {} European cities for {} days:\n",
                p.cities.len(),
                p.total_days
            );
            for (i, leg) in legs.iter().enumerate() {
                let days = leg.day_to.saturating_sub(leg.day_from) + 1;
                if i == 0 {
                    out.push_str(&format!(
                        "\n**Day {}-{}:** Arriving in {} and visit {} for {days} days.",
                        leg.day_from, leg.day_to, leg.city, leg.city
                    ));
                } else {
                    let prev = &legs[i - 1];
                    out.push_str(&format!(
                        "\n**Day {}:** Fly from {} to {}.",
                        leg.day_from, prev.city, leg.city
                    ));
                    out.push_str(&format!(
                        "\n**Day {}-{}:** Visit {} for {days} days.",
                        leg.day_from, leg.day_to, leg.city
                    ));
                }
            }
            out
        }
        (Payload::MeetingPlanning(p), Solution::MeetingSchedule(s)) => {
            let mut lines = vec![format!(
                "You start at {} at {}.",
                p.start_location,
                format_clock(p.day_start)
            )];
            for m in s {
                lines.push(format!(
                    "You meet {} at {} for {} minutes from {} to {}.",
                    m.friend,
                    m.location,
                    m.end.saturating_sub(m.start),
                    format_clock(m.start),
                    format_clock(m.end)
                ));
            }
            lines.join("\n")
        }
        (_, Solution::CoverSet(c)) => format!(
            "[{}]",
            c.iter().map(|v| format!("V{v}")).collect::<Vec<_>>().join(", ")
        ),
        (_, Solution::Matching(m)) => format!(
            "[{}]",
            m.iter()
                .map(|t| format!("({}, {}, {})", t.0, t.1, t.2))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        // mismatched kinds: fall back to the payload-free renderings
        (_, Solution::TripPlan(legs)) => legs
            .iter()
            .map(|l| format!("**Day {}-{}:** Visit {}.", l.day_from, l.day_to, l.city))
            .collect::<Vec<_>>()
            .join("\n"),
        (_, Solution::MeetingSchedule(s)) => s
            .iter()
            .map(|m| {
                format!(
                    "You meet {} at {} from {} to {}.",
                    m.friend,
                    m.location,
                    format_clock(m.start),
                    format_clock(m.end)
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}
