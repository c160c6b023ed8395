"""
Service layer and HTTP API of the channel-gain toolkit.
"""
