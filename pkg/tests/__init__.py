# LowRankQ tests
