# Configuration module for the channel-gain toolkit
