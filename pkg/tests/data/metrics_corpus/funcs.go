package corpus

import "strings"

// Join concatenates parts.
func Join(parts []string, sep string) string {
	return strings.Join(parts, sep)
}

func Max(a, b int) int {
	if a > b {
		return a
	}
	return b
}

type Counter struct{ n int }

func (c *Counter) Add(delta int, times int) {
	for i := 0; i < times; i++ {
		c.n += delta
	}
}

func Kind(code int, strict bool) string {
	switch code {
	case 1, 2:
		return "low"
	case 3:
		return "mid"
	}
	if code < 0 || (strict && code > 9) {
		return "bad"
	}
	return "high"
}
