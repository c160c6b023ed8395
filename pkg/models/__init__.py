# Problem data, schemas and errors for the channel-gain toolkit
