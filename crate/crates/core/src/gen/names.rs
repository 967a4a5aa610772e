pub(crate) const CITIES: &[&str] = &[
    "Amsterdam", "Athens", "Barcelona", "Berlin", "Bucharest", "Budapest", "Brussels",
    "Copenhagen", "Dublin", "Dubrovnik", "Edinburgh", "Florence", "Frankfurt", "Geneva",
    "Hamburg", "Helsinki", "Istanbul", "Krakow", "Lisbon", "London", "Lyon", "Madrid",
    "Manchester", "Milan", "Munich", "Naples", "Nice", "Oslo", "Paris", "Porto", "Prague",
    "Reykjavik", "Riga", "Rome", "Seville", "Split", "Stockholm", "Stuttgart", "Tallinn",
    "Valencia", "Venice", "Vienna", "Vilnius", "Warsaw", "Zurich",
];

pub(crate) const EVENTS: &[&str] = &[
    "wedding", "visit relatives", "workshop", "conference", "annual show", "meet a friend",
    "tour with a guide", "festival",
];

pub(crate) const FRIENDS: &[&str] = &[
    "Alice", "Barbara", "Carol", "Daniel", "Emily", "Frank", "George", "Helen", "Isaac",
    "James", "Karen", "Laura", "Mark", "Nancy", "Oliver", "Paul",
];

pub(crate) const PLACES: &[&str] = &[
    "Alamo Square", "Bayview", "Chinatown", "Embarcadero", "Fisherman's Wharf",
    "Golden Gate Park", "Haight-Ashbury", "Marina District", "Mission District", "Nob Hill",
    "North Beach", "Pacific Heights", "Presidio", "Richmond District", "Russian Hill",
    "Sunset District", "Union Square",
];
